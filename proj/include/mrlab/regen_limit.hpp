#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "mrlab/closed_set.hpp"
#include "mrlab/rng.hpp"

namespace mrlab {

/// d_t of a set with no point beyond t.
inline constexpr double kNoPoint = std::numeric_limits<double>::infinity();

/// One-sided alpha-stable variable with E exp(-lambda X) = exp(-lambda^alpha).
/// alpha = 1/2 uses X = 1 / (2 Z^2); other alphas use Kanter's representation.
double stable_increment(double alpha, Rng& rng);

/// Range of the alpha-stable subordinator sampled on the time grid {k step},
/// restricted to [0, 1].
ClosedSetSample sample_regenerative_set(double alpha, double step, Rng& rng);

struct MatheronValues {
  double d = kNoPoint;  // inf(F cap (t, inf)), kNoPoint when empty
  double g = 0.0;       // sup(F cap [0, t)), 0 by convention at t = 0
};

MatheronValues matheron_functionals(const ClosedSetSample& set, double t);

/// Closed-form limit laws of the alpha-stable regenerative set.
class LimitLawTable {
 public:
  explicit LimitLawTable(double alpha);

  double alpha() const { return alpha_; }

  /// Density of d_t: sin(a pi)/pi t^a / (y (y - t)^a), y > t.
  double dt_density(double t, double y) const;
  /// Same density at y = t + gap, exact for gaps far below ulp(t).
  double dt_density_gap(double t, double gap) const;
  /// P(d_t <= y): closed form for alpha = 1/2, quadrature otherwise.
  double dt_cdf(double t, double y) const;
  /// Quadrature route of dt_cdf, valid for every alpha.
  double dt_cdf_quadrature(double t, double y) const;
  /// Exact draw of d_t (d_t / t - 1 has the law of B / (1 - B), B ~ Beta(1-a, a)).
  double sample_dt(double t, Rng& rng) const;

  /// Law of g_1 (generalized arcsine, Beta(a, 1-a)).
  double g1_density(double u) const;
  /// Same density at u = 1 - v.
  double g1_density_complement(double v) const;
  double g1_cdf(double u) const;

  /// Joint density of (g_t, d_t - g_t) at alpha = 1/2: 1 / (2 pi sqrt(u v^3)).
  static double gd_joint_density_half(double u, double v);

 private:
  double alpha_;
};

double dt_law_cdf(double alpha, double t, double y);

/// P_B(d_s > t) for the limit set of the critical wetting contact set:
/// sqrt(s) + (1/2pi) int_{[0,s]x[t,1]} sqrt((1-v)/(u (v-u)^3)) du dv.
double clo_probability(double s, double t);
/// Boundary value P_B(d_s > 1) = sqrt(s).
double clo_boundary(double s);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Monte Carlo for clo_probability: sample A_{1/2} on [0, 1], weight by
/// (pi/2) sqrt(1 - g_1), average 1{d_s > t}.
McEstimate clo_mc_oracle(double s, double t, std::size_t samples, double step, std::uint64_t seed);

struct DcgPair {
  double finite_sum = 0.0;
  double limit = 0.0;
};

/// Both sides of the deterministic convergence with v_n = w_n = sqrt(n), u_n = n^{-3/2}.
DcgPair dcg_pair(double s, double t, std::int64_t N);

struct KsReport {
  double statistic = 0.0;
  std::size_t n = 0;
  double threshold = 0.0;
  bool pass = false;
};

/// One-sample KS statistic of sorted samples against cdf. Samples above
/// `upper` are treated as censored there (the sup runs over y <= upper).
/// The threshold is the asymptotic Kolmogorov quantile at `level`, unless
/// a positive fixed_threshold is given.
KsReport ks_test(std::span<const double> sorted_samples, const std::function<double(double)>& cdf, double level,
                 double upper = std::numeric_limits<double>::infinity(), double fixed_threshold = 0.0);

/// Sup distance between the empirical CDFs of two sorted samples.
double ks_two_sample_statistic(std::span<const double> a, std::span<const double> b);

struct FidiReport {
  struct PerT {
    double t = 0.0;
    KsReport ks;
    bool boundary_flag = false;  // t so close to 1 that few sets have points beyond t
  };
  struct Joint {
    double t1 = 0.0, t2 = 0.0;
    double statistic = 0.0;
    double threshold = 0.0;
    bool pass = false;
  };
  std::vector<PerT> marginals;
  std::vector<Joint> joints;
  bool pass = false;
};

/// Marginal KS of d_t for each t, plus pairwise joint CDFs of (d_t1, d_t2)
/// against a Monte Carlo sample of the regenerative composition law.
FidiReport fidi_convergence_check(const std::vector<ClosedSetSample>& sets, double alpha,
                                  const std::vector<double>& t_list, double level,
                                  std::size_t oracle_samples = 100000, std::uint64_t seed = 7,
                                  double fixed_threshold = 0.0);

}  // namespace mrlab
