#pragma once

#include <cstddef>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "mrlab/rng.hpp"

namespace mrlab {

/// Uniform trapezoid grid on [0, b].
class StateGrid {
 public:
  StateGrid(double b, std::size_t G);

  double length() const { return b_; }
  std::size_t size() const { return nodes_.size(); }
  double node(std::size_t i) const { return nodes_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  double spacing() const { return b_ / static_cast<double>(size() - 1); }

  /// Index of the equal-width cell (out of `cells`) containing node i.
  std::size_t cell_of(std::size_t i, std::size_t cells) const;
  /// Nearest grid index to a point of [0, b].
  std::size_t nearest(double x) const;

  bool operator==(const StateGrid& o) const { return b_ == o.b_ && size() == o.size(); }

 private:
  double b_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

class TailIndex {
 public:
  explicit TailIndex(double alpha);
  double value() const { return alpha_; }

 private:
  double alpha_;
};

/// L(n) = c for kind Constant, L(n) = c (1 + log n)^p for kind LogPower.
struct SlowlyVarying {
  enum class Kind { Constant, LogPower };
  Kind kind = Kind::Constant;
  double c = 1.0;
  double p = 0.0;

  static SlowlyVarying constant(double c = 1.0) { return {Kind::Constant, c, 0.0}; }
  static SlowlyVarying log_power(double c, double p) { return {Kind::LogPower, c, p}; }

  double operator()(double n) const;
  double derivative(double n) const;
  void validate() const;
};

enum class FamilyKind { Separable, Modulated };

struct KernelSpec {
  FamilyKind family = FamilyKind::Separable;
  double alpha = 0.5;
  SlowlyVarying L = SlowlyVarying::constant();
  double eps = 0.0;
  std::size_t G = 65;
  double b = 1.0;
  std::int64_t n_table = 1'000'000;

  nlohmann::json to_json() const;
  static KernelSpec from_json(const nlohmann::json& j);
};

/// Interarrival values beyond this are reported as this value; they exceed
/// every horizon the simulators use.
inline constexpr std::int64_t kInterarrivalCap = std::int64_t{1} << 60;

/// Heavy-tailed Markov renewal kernel on a grid:
///   k_{x,y}(n) = k(x,y) p_{x,y}(n),  k(x,y) = (1 + eps cos(2 pi (x+y)/b)) / b,
/// with p_{x,y}(n) = C L(n) n^{-1-alpha} for n > 8 and, in the modulated family,
/// a pair-dependent reshuffling of the mass on n <= 8.
class HeavyTailKernel {
 public:
  static constexpr int kHeadLength = 8;

  explicit HeavyTailKernel(const KernelSpec& spec);

  const KernelSpec& spec() const { return spec_; }
  const StateGrid& grid() const { return grid_; }
  double alpha() const { return alpha_.value(); }
  const SlowlyVarying& L() const { return spec_.L; }
  double tail_const() const { return tail_const_; }
  std::int64_t n_table() const { return spec_.n_table; }
  std::size_t size() const { return grid_.size(); }

  /// Transition density of J w.r.t. length measure.
  double k(std::size_t x, std::size_t y) const { return k_[x * size() + y]; }
  /// Phi(x,y) = C k(x,y): the asymptotic constant of k_{x,y}(n) n^{1+alpha} / L(n).
  double phi(std::size_t x, std::size_t y) const { return tail_const_ * k(x, y); }

  /// Common interarrival law p(n) = C L(n) n^{-1-alpha}.
  double base_pmf(std::int64_t n) const;
  /// P(N > n) under the common law.
  double base_tail(std::int64_t n) const;
  /// Conditional law P[tau_1 = n | J_0 = x, J_1 = y] = k_{x,y}(n) / k(x,y).
  double pmf(std::size_t x, std::size_t y, std::int64_t n) const;
  /// k_{x,y}(n).
  double joint(std::size_t x, std::size_t y, std::int64_t n) const { return k(x, y) * pmf(x, y, n); }

  /// Draws the next state of J from x (discrete law w_y k(x,y) on grid nodes).
  std::size_t sample_next_state(std::size_t x, Rng& rng) const;
  /// Draws tau_1 given (J_0, J_1) = (x, y).
  std::int64_t sample_interarrival(std::size_t x, std::size_t y, Rng& rng) const;

  /// sum_{j > m} L(j) j^{-1-alpha} (unnormalized), for real m >= 1.
  double unnormalized_tail(double m) const;

 private:
  double head_factor(std::size_t x, std::size_t y, int n) const;
  std::int64_t invert_tail(double r) const;

  KernelSpec spec_;
  StateGrid grid_;
  TailIndex alpha_;
  double tail_const_ = 0.0;
  std::vector<double> k_;         // G x G
  std::vector<double> row_cdf_;   // G x G cumulative of w_y k(x,y)
  std::vector<double> cdf_;       // cdf_[n-1] = P(N <= n), n = 1..n_table
  double head_mean_ = 0.0;
  double head_scale_ = 0.0;
};

struct StationaryMeasure {
  std::vector<double> density;  // w.r.t. length measure at grid nodes
  double total = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

StationaryMeasure stationary_distribution(const HeavyTailKernel& kernel, double tol = 1e-12,
                                          int max_iter = 100000);

/// E_{Pi^(2)}[Phi/k] = int int Phi(u,v) Pi(du) mu(dv).
double pi2_expectation(const HeavyTailKernel& kernel, const StationaryMeasure& pi);

/// Pi-mass of each of `cells` equal-width cells (node-to-cell rule of StateGrid::cell_of).
std::vector<double> cell_masses(const StateGrid& grid, const StationaryMeasure& pi, std::size_t cells);

const char* to_string(FamilyKind f);

}  // namespace mrlab
