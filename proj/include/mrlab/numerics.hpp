#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mrlab::numerics {

inline constexpr double kPi = 3.14159265358979323846;

/// Pairwise (cascade) summation; error grows like O(log n) ulps.
double pairwise_sum(std::span<const double> values);

/// Running sum / sum of squares for replica means and standard errors.
struct MeanAccumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++count;
  }
  void merge(const MeanAccumulator& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
    count += o.count;
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
  double variance() const;
  /// Standard error of the mean.
  double std_error() const;
};

/// Per-cell accumulators (vector version of MeanAccumulator).
struct CellAccumulator {
  std::vector<double> sum;
  std::vector<double> sum_sq;
  std::size_t count = 0;

  CellAccumulator() = default;
  explicit CellAccumulator(std::size_t cells) : sum(cells, 0.0), sum_sq(cells, 0.0) {}

  /// Adds one replica's per-cell values.
  void add(std::span<const double> values);
  void merge(const CellAccumulator& o);
  std::vector<double> means() const;
  std::vector<double> std_errors() const;
};

/// Adaptive Gauss-Kronrod (15-point) on [a, b].
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-12, unsigned max_depth = 25);

/// Tanh-sinh quadrature on [a, b]; tolerates integrable endpoint cusps and
/// singularities that stall Gauss-Kronrod.
double integrate_endpoint(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-13);

/// Iterated adaptive integral of f(x, y) over [ax, bx] x [ay(x), by(x)].
double integrate_2d(const std::function<double(double, double)>& f, double ax, double bx,
                    const std::function<double(double)>& ay, const std::function<double(double)>& by,
                    double rel_tol = 1e-10);

/// sum_{n > N} exp(-lambda n) n^{-3/2} for lambda >= 0 (Euler-Maclaurin with
/// the exact incomplete-gamma integral). N >= 1.
double three_halves_tail(double lambda, double N);

/// Kolmogorov limiting survival function Q(x) = P(sqrt(n) D_n > x).
double kolmogorov_sf(double x);

/// x such that kolmogorov_sf(x) = level.
double kolmogorov_quantile(double level);

}  // namespace mrlab::numerics
