#pragma once

#include <cstddef>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "mrlab/core_model.hpp"
#include "mrlab/rng.hpp"

namespace mrlab {

/// Mean-zero increment law with bounded continuous density h, plus the strip width a.
/// Every kind is parameterized by its standard deviation sigma.
struct WalkModel {
  enum class Kind { Gaussian, Uniform, Laplace };
  Kind kind = Kind::Gaussian;
  double sigma = 1.0;
  double a = 1.0;

  static WalkModel gaussian(double sigma, double a) { return {Kind::Gaussian, sigma, a}; }
  static WalkModel uniform(double sigma, double a) { return {Kind::Uniform, sigma, a}; }
  static WalkModel laplace(double sigma, double a) { return {Kind::Laplace, sigma, a}; }

  double pdf(double z) const;
  double cdf(double z) const;
  double sample(Rng& rng) const;
  /// Radius beyond which each tail carries less than 1e-17.
  double support_radius() const;
  bool symmetric() const { return true; }

  /// Rejects sigma <= 0, a <= 0, and laws with P[S_1 > a] or P[-S_1 > a] outside (0, 1).
  void validate() const;

  nlohmann::json to_json() const;
  static WalkModel from_json(const nlohmann::json& j);
};

const char* to_string(WalkModel::Kind k);

struct LadderSample {
  std::int64_t T1 = 0;
  double H1 = 0.0;
  std::int64_t T1m = 0;
  double H1m = 0.0;
  int restarts = 0;  // cap events across both halves
};

/// First strict ascending and descending ladder variables of a walk from 0.
/// A half that exceeds `cap` steps is discarded and redrawn.
LadderSample sample_ladder(const WalkModel& model, std::int64_t cap, Rng& rng);

/// Sorted ascending and descending first ladder heights from independent replicas.
struct LadderTailTable {
  std::vector<double> ascending;
  std::vector<double> descending;
  std::size_t replicas = 0;
  std::size_t cap_events = 0;
  std::int64_t cap = 0;
  double mean_T_capped = 0.0;

  double cap_rate() const;
  bool cap_warning() const { return cap_rate() > 1e-3; }
  /// P[H1 >= r] and its binomial standard error.
  double tail_ascending(double r) const;
  double tail_descending(double r) const;
  double se_ascending(double r) const;
  double se_descending(double r) const;
  double mean_ascending() const;
  double mean_ascending_se() const;
};

LadderTailTable ladder_tail_table(const WalkModel& model, std::size_t replicas, std::uint64_t seed,
                                  std::int64_t cap = 1'000'000);

struct LadderTailRow {
  double r = 0.0;
  double p_ascending = 0.0, se_ascending = 0.0;
  double p_descending = 0.0, se_descending = 0.0;
};

std::vector<LadderTailRow> ladder_tail_probs(const LadderTailTable& table, std::span<const double> points);

/// Phi_a(x, y) = P[H1^- >= a - y] P[H1 >= a - x] / (sigma sqrt(2 pi)).
double phi_a(const WalkModel& model, const LadderTailTable& table, double x, double y);

struct RenewalFunctionEstimate {
  std::vector<double> x_grid;
  std::vector<double> U_values, U_se;
  std::vector<double> V_values, V_se;
  std::size_t replicas = 0;
  double truncated_fraction = 0.0;  // replicas whose heights stayed below max x after `horizon` epochs
};

/// U(x) = E #{k >= 0 : H_k <= x}, V the descending analogue.
RenewalFunctionEstimate renewal_function_estimate(const WalkModel& model, std::vector<double> x_grid,
                                                  std::size_t replicas, std::int64_t horizon,
                                                  std::uint64_t seed, std::int64_t cap = 1'000'000);

struct ConstrainedKernelOptions {
  std::size_t G = 32;
  std::int64_t n_max = 4096;
  double M = 0.0;                  // 0: a + 7 sigma sqrt(n_max)
  std::size_t halfline_cells = 0;  // 0: max(4 G, (M - a) / (sigma / 8))
  std::size_t ladder_replicas = 100000;
  std::int64_t ladder_cap = 1'000'000;
  std::uint64_t seed = 1;

  nlohmann::json to_json() const;
  static ConstrainedKernelOptions from_json(const nlohmann::json& j);
};

/// f_{x,y}(n) = P_x[S_1 > a, ..., S_{n-1} > a, S_n in dy]/dy on the strip grid, n = 1..n_max.
struct ConstrainedKernelTensor {
  WalkModel model;
  StateGrid grid{1.0, 2};
  std::int64_t n_max = 0;
  double M = 0.0;
  std::size_t halfline_cells = 0;

  std::vector<double> f;            // [(n-1) G + x] G + y
  std::vector<double> survival;     // [n G + x], n = 0..n_max: P_x[S_1..S_n > a]
  std::vector<double> fbar;         // [n G + x], n = 0..n_max: sum_{m > n} int f_m, tail model included
  std::vector<double> phi;          // [x G + y]: Phi_a
  std::vector<double> strip_tail;   // [x]: sum_{n > n_max} int Phi_a(x, y) n^{-3/2} dy
  std::vector<double> defect;       // [x]: P_x[tau_1 = inf]
  std::vector<double> truncation;   // [x]: mass lost beyond M or trimmed
  std::vector<double> mass_balance; // [x]: sum_n int f + strip_tail + defect

  std::size_t G() const { return grid.size(); }
  double at(std::int64_t n, std::size_t x, std::size_t y) const {
    return f[(static_cast<std::size_t>(n - 1) * G() + x) * G() + y];
  }
  double phi_at(std::size_t x, std::size_t y) const { return phi[x * G() + y]; }
  /// Trapezoid integral of f[n][x][.] over the strip.
  double strip_mass(std::int64_t n, std::size_t x) const;
  double survival_at(std::int64_t n, std::size_t x) const { return survival[static_cast<std::size_t>(n) * G() + x]; }
  double fbar_at(std::int64_t n, std::size_t x) const { return fbar[static_cast<std::size_t>(n) * G() + x]; }
  double max_balance_error() const;
};

/// Propagates the killed walk on the half-line (a, M] in cells of width (M - a)/halfline_cells
/// using exact cell transition probabilities; Phi_a comes from a ladder-height Monte Carlo.
ConstrainedKernelTensor constrained_kernel(const WalkModel& model, const ConstrainedKernelOptions& opt);
ConstrainedKernelTensor constrained_kernel(const WalkModel& model, const ConstrainedKernelOptions& opt,
                                           const LadderTailTable& ladders);

/// Integral over [lo, hi] of the piecewise-linear interpolant of grid values.
double strip_integral(const StateGrid& grid, std::span<const double> values, double lo, double hi);

struct ConstrainedKernelMc {
  std::int64_t n = 0;
  std::size_t x = 0;
  double acceptance = 0.0;  // P_x[S_1..S_{n-1} > a, S_n in [0, a]]
  double acceptance_se = 0.0;
  std::vector<double> bin_mass;  // per equal-width strip bin
  std::vector<double> bin_se;
  std::size_t replicas = 0;
};

ConstrainedKernelMc constrained_kernel_mc(const WalkModel& model, double x, std::int64_t n, std::size_t bins,
                                          std::size_t replicas, std::uint64_t seed);

struct ThmPrRow {
  std::int64_t n = 0;
  double e = 0.0;  // max |n^{3/2} f / Phi_a - 1|
};

struct ThmPrReport {
  std::vector<ThmPrRow> rows;
  bool decreasing = false;
};

ThmPrReport thm_pr_check(const ConstrainedKernelTensor& tensor, const std::vector<std::int64_t>& n_list);

struct DoneyReport {
  double estimate = 0.0;
  double std_error = 0.0;
  double predicted = 0.0;
  double ratio = 0.0;
  double U_x = 0.0;
  double V_integral = 0.0;
};

/// P[S_n in (x-y-delta, x-y], tau_x > n] by Monte Carlo (walk killed once S_k >= x)
/// against U(x) int_y^{y+delta} V / (sigma sqrt(2 pi) n^{3/2}).
DoneyReport doney_local_check(const WalkModel& model, double x, double y, double delta, std::int64_t n,
                              std::size_t replicas, std::uint64_t seed, const RenewalFunctionEstimate& renewal);

struct DualityReport {
  std::int64_t m = 0;
  double lo = 0.0, hi = 0.0;
  double meander = 0.0, meander_se = 0.0;  // P[S_1..S_m <= 0, -S_m in I]
  double ladder = 0.0, ladder_se = 0.0;    // P[m is a strict descending ladder epoch, -S_m in I]
  double z = 0.0;
};

/// Two independent Monte Carlo estimates of both sides of the duality lemma.
DualityReport duality_check(const WalkModel& model, std::int64_t m, double lo, double hi, std::size_t replicas,
                            std::uint64_t seed);

}  // namespace mrlab
