#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mrlab/closed_set.hpp"
#include "mrlab/core_model.hpp"

namespace mrlab {

/// Renewal epochs and modulating states of one simulated path. The last
/// epoch may exceed the horizon (the overshoot is kept for censoring).
struct MrpTrajectory {
  std::vector<std::int64_t> times;
  std::vector<std::size_t> states;
  std::int64_t horizon = 0;
};

MrpTrajectory simulate_mrp(const HeavyTailKernel& kernel, std::size_t x0, std::int64_t horizon, Rng& rng);

/// Replica estimate of U(n, x0, cell) for equal-width cells, together with the
/// integral of a test function against U(n, x0, .).
struct MassFunctionEstimate {
  std::int64_t n = 0;
  std::size_t start = 0;
  std::vector<double> cell_masses;
  std::vector<double> std_errors;
  double test_integral = 0.0;
  double test_std_error = 0.0;
  std::size_t replicas = 0;

  double total() const;
};

using TestFunction = std::function<double(double)>;

/// Default continuous test function 1 + sin(2 pi y / b) / 2.
TestFunction default_test_function(double b);

/// Nested estimates at several horizons computed from the same trajectories.
std::vector<MassFunctionEstimate> empirical_mass_functions(const HeavyTailKernel& kernel, std::size_t x0,
                                                           std::vector<std::int64_t> horizons,
                                                           std::size_t replicas, std::uint64_t seed,
                                                           std::size_t cells = 4, TestFunction f = {});

MassFunctionEstimate empirical_mass_function(const HeavyTailKernel& kernel, std::size_t x0, std::int64_t n,
                                             std::size_t replicas, std::uint64_t seed, std::size_t cells = 4,
                                             TestFunction f = {});

struct CellComparison {
  double estimate = 0.0;
  double std_error = 0.0;
  double limit = 0.0;
  double z = 0.0;
  double rel_dev = 0.0;
};

struct Mp2Report {
  std::int64_t n = 0;
  double limit_constant = 0.0;  // alpha / (Gamma(1+a) Gamma(1-a) E_{Pi2}[Phi/k])
  std::vector<CellComparison> cells;
  CellComparison total;
  CellComparison test_function;
  double max_rel_dev = 0.0;
};

/// alpha / (Gamma(1+alpha) Gamma(1-alpha) E_{Pi2}[Phi/k]).
double mp2_limit_constant(double alpha, double e_pi2);

Mp2Report mp2_check(const MassFunctionEstimate& estimate, const HeavyTailKernel& kernel,
                    const StationaryMeasure& pi, TestFunction f = {});

struct LaplaceEstimate {
  double lambda = 0.0;
  std::vector<double> cell_masses;
  std::vector<double> std_errors;
  std::size_t replicas = 0;

  double total() const;
};

/// Replica average of sum_k exp(-lambda tau_k) 1{J_k in cell}, k >= 1, each
/// trajectory run until exp(-lambda tau) < 1e-8.
LaplaceEstimate laplace_mass(const HeavyTailKernel& kernel, std::size_t x0, double lambda,
                             std::size_t replicas, std::uint64_t seed, std::size_t cells = 4);

/// Gamma(1-alpha) lambda^alpha L(1/lambda) E_{Pi2}[Phi/k] / alpha.
double laplace_prefactor(double alpha, const SlowlyVarying& L, double lambda, double e_pi2);

struct LaplaceReport {
  double lambda = 0.0;
  double prefactor = 0.0;
  LaplaceEstimate estimate;
  std::vector<CellComparison> cells;  // scaled estimate vs Pi[cell]
  CellComparison total;
  double max_rel_dev = 0.0;
};

LaplaceReport laplace_mass_check(const HeavyTailKernel& kernel, const StationaryMeasure& pi, std::size_t x0,
                                 double lambda, std::size_t replicas, std::uint64_t seed, std::size_t cells = 4);

/// 1 - phi_z(lambda) = sum_n p_{x,y}(n) (1 - e^{-lambda n}) by direct summation.
double one_minus_phi(const HeavyTailKernel& kernel, std::size_t x, std::size_t y, double lambda);

struct InterarrivalLaplaceRow {
  double lambda = 0.0;
  double sup_abs_dev = 0.0;  // sup_z |k (1-phi_z)/(lambda^a L(1/lambda)) - Phi Gamma(1-a)/a|
  double sup_rel_dev = 0.0;  // same, divided by Phi Gamma(1-a)/a
  double scalar_ratio = 0.0; // (1-phi)/(lambda^a L(1/lambda)) at the first probed pair
};

std::vector<InterarrivalLaplaceRow> interarrival_laplace_check(const HeavyTailKernel& kernel,
                                                               const std::vector<double>& lambdas,
                                                               std::size_t pair_stride = 8);

struct GreenReport {
  std::int64_t n1 = 0, n2 = 0;
  double estimate = 0.0;
  double std_error = 0.0;
  double analytic = 0.0;
  double rel_dev = 0.0;
  double z = 0.0;
};

/// Window sum of P[n in tau] for n in (n1, n2] against the Doney equivalent,
/// for an ordinary (unmodulated) renewal.
GreenReport green_function_check(const HeavyTailKernel& kernel, std::int64_t n1, std::int64_t n2,
                                 std::size_t replicas, std::uint64_t seed);

/// Same, building the degenerate kernel for (alpha, L).
GreenReport green_function_check(double alpha, const SlowlyVarying& L, std::int64_t n1, std::int64_t n2,
                                 std::size_t replicas, std::uint64_t seed, std::int64_t n_table = 1'000'000);

/// Analytic window sum of (alpha sin(alpha pi)/pi) / (C L(n) n^{1-alpha}) over (n1, n2].
double doney_window_sum(double alpha, const SlowlyVarying& L, double tail_const, std::int64_t n1,
                        std::int64_t n2);

/// {tau_k / N : tau_k <= N}.
ClosedSetSample rescaled_contact_set(const MrpTrajectory& traj, std::int64_t N);

}  // namespace mrlab
