#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mrlab/closed_set.hpp"
#include "mrlab/rng.hpp"
#include "mrlab/walk_fluct.hpp"

namespace mrlab {

enum class TailMode { Truncate, PhiTail };

/// b^lambda(x, y) = sum_n e^{-lambda n} f_{x,y}(n) on the strip grid.
struct OperatorDiscretization {
  double lambda = 0.0;
  TailMode tail_mode = TailMode::PhiTail;
  StateGrid grid{1.0, 2};
  std::vector<double> b;  // [x G + y]

  std::size_t G() const { return grid.size(); }
  double at(std::size_t x, std::size_t y) const { return b[x * G() + y]; }
};

OperatorDiscretization build_blambda(const ConstrainedKernelTensor& tensor, double lambda, TailMode mode);

/// Nystrom operator from an explicit kernel matrix (for tests and rank-one checks).
OperatorDiscretization operator_from_matrix(const StateGrid& grid, std::vector<double> b, double lambda = 0.0);

struct SpectralResult {
  double delta = 0.0;
  double delta_left = 0.0;
  std::vector<double> v;  // right eigenfunction
  std::vector<double> w;  // left eigenfunction; int w = 1, int v w = 1
  double residual_right = 0.0;
  double residual_left = 0.0;
  int iterations = 0;
};

/// Power iteration on B diag(weights) and its adjoint until both relative residuals are below `tol`.
SpectralResult spectral_radius(const OperatorDiscretization& op, double tol = 1e-10, int max_iter = 100000);

/// -log delta^a(0) with the Phi_a tail completion.
double beta_critical(const ConstrainedKernelTensor& tensor);

/// 0 for beta <= beta_c, else the lambda solving delta^a(lambda) = e^{-beta}, by bisection to `tol`.
double free_energy(const ConstrainedKernelTensor& tensor, double beta, double tol = 1e-10);
double free_energy(const ConstrainedKernelTensor& tensor, double beta, double beta_c, double tol);

struct TiltedKernel {
  const ConstrainedKernelTensor* tensor = nullptr;
  double beta = 0.0;
  double beta_c = 0.0;
  double free_energy = 0.0;
  SpectralResult spectral;
  std::vector<double> row_masses;

  /// e^beta f_{x,y}(n) e^{-F n} v(y) / v(x).
  double at(std::int64_t n, std::size_t x, std::size_t y) const;
  /// min(1, e^{beta - beta_c}).
  double expected_row_mass() const;
  double max_row_mass_error() const;
};

/// Builds K^beta and checks its row masses; throws DiscretizationError beyond `tolerance`.
TiltedKernel tilted_kernel(const ConstrainedKernelTensor& tensor, double beta, double tolerance = 1e-2);
TiltedKernel tilted_kernel(const ConstrainedKernelTensor& tensor, double beta, double beta_c, double tolerance);

/// Weight of the final excursion after the last contact.
/// Renewal: P_y[tau_1 > m] = Fbar_y(m) + P_y[tau_1 = inf], the last-contact decomposition used for
/// the critical asymptotics and the contact-set law.
/// Constrained: P_y[S_1 > a, ..., S_m > a], which makes Z[n][x] = E_x[e^{beta L_n} 1{S_1..S_n >= 0}].
enum class LastExcursion { Renewal, Constrained };

struct PartitionTable {
  const ConstrainedKernelTensor* tensor = nullptr;
  double beta = 0.0;
  std::int64_t N = 0;
  LastExcursion mode = LastExcursion::Renewal;
  std::vector<double> Z;  // [n G + x], n = 0..N

  std::size_t G() const { return tensor->G(); }
  double at(std::int64_t n, std::size_t x) const { return Z[static_cast<std::size_t>(n) * G() + x]; }
  /// Weight of no further contact within m steps from y.
  double tail_weight(std::int64_t m, std::size_t y) const;
};

PartitionTable partition_table(const ConstrainedKernelTensor& tensor, double beta, std::int64_t N,
                               LastExcursion mode = LastExcursion::Renewal);

/// Max over (n, x) of |sum of transition masses + termination mass - Z[n][x]| / Z[n][x].
double transition_mass_error(const PartitionTable& table);

struct EstZReport {
  std::vector<std::int64_t> N_list;
  std::vector<std::vector<double>> R;  // R[i][x] = Z[N_i][x] / (sqrt(N_i) v(x))
  double C = 0.0;                      // explicit constant
  double C_shorthand = 0.0;            // int w defect / (pi e^{beta_c} int int v w Phi_a)
  double max_variation = 0.0;          // max_x (max_N R - min_N R) / mean_N R
  double max_deviation = 0.0;          // max_x |R(N_last, x) / C - 1|
  double max_cross_x = 0.0;            // max_{x,x'} |R(N_last,x)/R(N_last,x') - 1|
};

EstZReport estz_check(const PartitionTable& table, const SpectralResult& spectral,
                      const std::vector<std::int64_t>& N_list);

/// Exact forward sampling of the contact set under the polymer measure of `table`
/// (epochs rescaled by N, 0 included).
ClosedSetSample sample_critical_contacts(const PartitionTable& table, std::size_t x0, Rng& rng);

std::vector<ClosedSetSample> sample_critical_paths(const PartitionTable& table, std::size_t x0, std::size_t paths,
                                                   std::uint64_t seed);

struct Main2Report {
  double s = 0.0, t = 0.0;
  double p_boundary = 0.0, se_boundary = 0.0;  // P(d_s >= 1)
  double boundary_limit = 0.0;                 // sqrt(s)
  double p_clo = 0.0, se_clo = 0.0;            // P(d_s > t)
  double clo_limit = 0.0;
  std::size_t paths = 0;
  bool d_at_least_s = true;
};

Main2Report main2_check(const std::vector<ClosedSetSample>& paths, double s, double t);

struct ConstrainedMc {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Brute-force E_x[e^{beta L_n} 1{S_1 >= 0, ..., S_n >= 0}].
ConstrainedMc partition_mc(const WalkModel& model, double x, double beta, std::int64_t n, std::size_t walks,
                           std::uint64_t seed);

}  // namespace mrlab
