#include "mrlab/wetting.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mrlab/error.hpp"
#include "mrlab/numerics.hpp"
#include "mrlab/parallel.hpp"
#include "mrlab/regen_limit.hpp"

namespace mrlab {

using numerics::kPi;

namespace {

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// y = B diag(wt) x  (transpose = false) or y = B^T diag(wt) x  (transpose = true).
void apply(const OperatorDiscretization& op, const std::vector<double>& x, std::vector<double>& y, bool transpose) {
  const std::size_t G = op.G();
  std::fill(y.begin(), y.end(), 0.0);
  if (!transpose) {
    for (std::size_t i = 0; i < G; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < G; ++j) s += op.b[i * G + j] * op.grid.weight(j) * x[j];
      y[i] = s;
    }
  } else {
    for (std::size_t i = 0; i < G; ++i) {
      const double c = op.grid.weight(i) * x[i];
      for (std::size_t j = 0; j < G; ++j) y[j] += op.b[i * G + j] * c;
    }
  }
}

struct PowerResult {
  double delta = 0.0;
  std::vector<double> vec;
  double residual = 0.0;
  int iterations = 0;
};

PowerResult power_iteration(const OperatorDiscretization& op, bool transpose, double tol, int max_iter) {
  const std::size_t G = op.G();
  std::vector<double> x(G, 1.0), y(G);
  std::vector<double> history;
  for (int it = 1; it <= max_iter; ++it) {
    apply(op, x, y, transpose);
    const double norm = max_abs(y);
    if (!(norm > 0.0) || !std::isfinite(norm)) throw ConvergenceError("spectral_radius: operator annihilates the iterate");
    for (std::size_t i = 0; i < G; ++i) y[i] /= norm;
    std::swap(x, y);
    apply(op, x, y, transpose);
    const double delta = max_abs(y);
    double res = 0.0;
    for (std::size_t i = 0; i < G; ++i) res = std::max(res, std::abs(y[i] - delta * x[i]));
    res /= delta;
    if (res < tol) return {delta, x, res, it};
    if (history.size() < 8 || it % 1000 == 0) history.push_back(res);
  }
  std::string msg = "spectral_radius: no convergence; residual history:";
  for (double h : history) msg += " " + std::to_string(h);
  throw ConvergenceError(msg);
}

}  // namespace

OperatorDiscretization build_blambda(const ConstrainedKernelTensor& tensor, double lambda, TailMode mode) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("build_blambda: lambda must be >= 0");
  if (lambda == 0.0 && mode == TailMode::Truncate)
    throw InvalidArgument("build_blambda: lambda = 0 needs the Phi_a tail completion");
  const std::size_t G = tensor.G();
  OperatorDiscretization op;
  op.lambda = lambda;
  op.tail_mode = mode;
  op.grid = tensor.grid;
  op.b.assign(G * G, 0.0);
  for (std::int64_t n = tensor.n_max; n >= 1; --n) {
    const double wgt = std::exp(-lambda * static_cast<double>(n));
    if (wgt == 0.0) continue;
    const double* f = &tensor.f[static_cast<std::size_t>(n - 1) * G * G];
    for (std::size_t k = 0; k < G * G; ++k) op.b[k] += wgt * f[k];
  }
  if (mode == TailMode::PhiTail) {
    const double tail = numerics::three_halves_tail(lambda, static_cast<double>(tensor.n_max));
    for (std::size_t k = 0; k < G * G; ++k) op.b[k] += tail * tensor.phi[k];
  }
  return op;
}

OperatorDiscretization operator_from_matrix(const StateGrid& grid, std::vector<double> b, double lambda) {
  if (b.size() != grid.size() * grid.size()) throw InvalidArgument("operator_from_matrix: size mismatch");
  for (double v : b) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("operator_from_matrix: entries must be finite and >= 0");
  }
  OperatorDiscretization op;
  op.lambda = lambda;
  op.grid = grid;
  op.b = std::move(b);
  return op;
}

SpectralResult spectral_radius(const OperatorDiscretization& op, double tol, int max_iter) {
  const PowerResult right = power_iteration(op, false, tol, max_iter);
  const PowerResult left = power_iteration(op, true, tol, max_iter);
  SpectralResult r;
  r.delta = right.delta;
  r.delta_left = left.delta;
  r.v = right.vec;
  r.w = left.vec;
  r.residual_right = right.residual;
  r.residual_left = left.residual;
  r.iterations = std::max(right.iterations, left.iterations);
  const std::size_t G = op.G();
  double iw = 0.0;
  for (std::size_t i = 0; i < G; ++i) iw += op.grid.weight(i) * r.w[i];
  for (double& x : r.w) x /= iw;
  double ivw = 0.0;
  for (std::size_t i = 0; i < G; ++i) ivw += op.grid.weight(i) * r.v[i] * r.w[i];
  for (double& x : r.v) x /= ivw;
  if (*std::min_element(r.v.begin(), r.v.end()) <= 0.0 || *std::min_element(r.w.begin(), r.w.end()) <= 0.0)
    throw ConvergenceError("spectral_radius: Perron eigenfunction is not strictly positive");
  return r;
}

double beta_critical(const ConstrainedKernelTensor& tensor) {
  return -std::log(spectral_radius(build_blambda(tensor, 0.0, TailMode::PhiTail)).delta);
}

double free_energy(const ConstrainedKernelTensor& tensor, double beta, double tol) {
  return free_energy(tensor, beta, beta_critical(tensor), tol);
}

double free_energy(const ConstrainedKernelTensor& tensor, double beta, double beta_c, double tol) {
  if (beta <= beta_c) return 0.0;
  const double target = std::exp(-beta);
  const auto delta = [&](double lambda) {
    return spectral_radius(build_blambda(tensor, lambda, TailMode::PhiTail)).delta;
  };
  double lo = 0.0, hi = 1.0;
  double d_hi = delta(hi);
  while (d_hi > target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e4) throw ConvergenceError("free_energy: no bracket; delta(" + std::to_string(hi) + ") = " +
                                         std::to_string(d_hi) + " > e^-beta = " + std::to_string(target));
    d_hi = delta(hi);
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (delta(mid) > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double TiltedKernel::at(std::int64_t n, std::size_t x, std::size_t y) const {
  return std::exp(beta - free_energy * static_cast<double>(n)) * tensor->at(n, x, y) * spectral.v[y] / spectral.v[x];
}

double TiltedKernel::expected_row_mass() const { return std::min(1.0, std::exp(beta - beta_c)); }

double TiltedKernel::max_row_mass_error() const {
  double e = 0.0;
  for (double m : row_masses) e = std::max(e, std::abs(m - expected_row_mass()));
  return e;
}

TiltedKernel tilted_kernel(const ConstrainedKernelTensor& tensor, double beta, double tolerance) {
  return tilted_kernel(tensor, beta, beta_critical(tensor), tolerance);
}

TiltedKernel tilted_kernel(const ConstrainedKernelTensor& tensor, double beta, double beta_c, double tolerance) {
  TiltedKernel k;
  k.tensor = &tensor;
  k.beta = beta;
  k.beta_c = beta_c;
  k.free_energy = free_energy(tensor, beta, beta_c, 1e-10);
  const auto op = build_blambda(tensor, k.free_energy, TailMode::PhiTail);
  k.spectral = spectral_radius(op);
  const std::size_t G = tensor.G();
  k.row_masses.assign(G, 0.0);
  for (std::size_t x = 0; x < G; ++x) {
    double s = 0.0;
    for (std::size_t y = 0; y < G; ++y) s += op.at(x, y) * tensor.grid.weight(y) * k.spectral.v[y];
    k.row_masses[x] = std::exp(beta) * s / k.spectral.v[x];
  }
  if (k.max_row_mass_error() > tolerance)
    throw DiscretizationError("tilted_kernel: row masses off by " + std::to_string(k.max_row_mass_error()) +
                              "; refine G, halfline_cells or n_max");
  return k;
}

double PartitionTable::tail_weight(std::int64_t m, std::size_t y) const {
  if (mode == LastExcursion::Constrained) return tensor->survival_at(m, y);
  return tensor->fbar_at(m, y) + tensor->defect[y];
}

PartitionTable partition_table(const ConstrainedKernelTensor& tensor, double beta, std::int64_t N,
                               LastExcursion mode) {
  if (N < 0) throw InvalidArgument("partition_table: N must be >= 0");
  if (N > tensor.n_max) throw InvalidArgument("partition_table: tensor horizon n_max is below N");
  PartitionTable t;
  t.tensor = &tensor;
  t.beta = beta;
  t.N = N;
  t.mode = mode;
  const std::size_t G = tensor.G();
  const auto Nn = static_cast<std::size_t>(N);
  t.Z.assign((Nn + 1) * G, 0.0);
  std::vector<double> zw((Nn + 1) * G, 0.0);
  const double eb = std::exp(beta);
  for (std::size_t x = 0; x < G; ++x) {
    t.Z[x] = 1.0;
    zw[x] = tensor.grid.weight(x);
  }
  for (std::size_t n = 1; n <= Nn; ++n) {
    parallel::for_each_index(G, [&](std::size_t x) {
      double s = 0.0;
      for (std::size_t m = 1; m <= n; ++m) {
        const double* f = &tensor.f[((m - 1) * G + x) * G];
        const double* z = &zw[(n - m) * G];
        double d = 0.0;
        for (std::size_t y = 0; y < G; ++y) d += f[y] * z[y];
        s += d;
      }
      t.Z[n * G + x] = t.tail_weight(static_cast<std::int64_t>(n), x) + eb * s;
    });
    for (std::size_t x = 0; x < G; ++x) zw[n * G + x] = tensor.grid.weight(x) * t.Z[n * G + x];
  }
  return t;
}

double transition_mass_error(const PartitionTable& table) {
  const auto& T = *table.tensor;
  const std::size_t G = table.G();
  const double eb = std::exp(table.beta);
  double err = 0.0;
  for (std::int64_t r = 1; r <= table.N; ++r) {
    for (std::size_t x = 0; x < G; ++x) {
      double s = table.tail_weight(r, x);
      for (std::int64_t n = 1; n <= r; ++n)
        for (std::size_t y = 0; y < G; ++y) s += eb * T.at(n, x, y) * T.grid.weight(y) * table.at(r - n, y);
      err = std::max(err, std::abs(s / table.at(r, x) - 1.0));
    }
  }
  return err;
}

EstZReport estz_check(const PartitionTable& table, const SpectralResult& spectral,
                      const std::vector<std::int64_t>& N_list) {
  const auto& T = *table.tensor;
  const std::size_t G = table.G();
  EstZReport rep;
  rep.N_list = N_list;
  for (std::int64_t N : N_list) {
    if (N < 1 || N > table.N) throw InvalidArgument("estz_check: N outside the table");
    std::vector<double> row(G);
    for (std::size_t x = 0; x < G; ++x) row[x] = table.at(N, x) / (std::sqrt(static_cast<double>(N)) * spectral.v[x]);
    rep.R.push_back(std::move(row));
  }
  const double bc = table.beta;
  double iw = 0.0, iwd = 0.0, vwphi = 0.0;
  for (std::size_t s = 0; s < G; ++s) {
    iw += T.grid.weight(s) * spectral.w[s];
    iwd += T.grid.weight(s) * spectral.w[s] * T.defect[s];
    for (std::size_t t = 0; t < G; ++t)
      vwphi += T.grid.weight(s) * T.grid.weight(t) * spectral.v[t] * spectral.w[s] * T.phi_at(s, t);
  }
  rep.C = (1.0 - std::exp(-bc)) * iw / (kPi * std::exp(bc) * vwphi);
  rep.C_shorthand = iwd / (kPi * std::exp(bc) * vwphi);
  for (std::size_t x = 0; x < G; ++x) {
    double lo = rep.R[0][x], hi = lo, mean = 0.0;
    for (const auto& row : rep.R) {
      lo = std::min(lo, row[x]);
      hi = std::max(hi, row[x]);
      mean += row[x];
    }
    mean /= static_cast<double>(rep.R.size());
    rep.max_variation = std::max(rep.max_variation, (hi - lo) / mean);
    rep.max_deviation = std::max(rep.max_deviation, std::abs(rep.R.back()[x] / rep.C - 1.0));
  }
  const auto& last = rep.R.back();
  const auto [mn, mx] = std::minmax_element(last.begin(), last.end());
  rep.max_cross_x = *mx / *mn - 1.0;
  return rep;
}

ClosedSetSample sample_critical_contacts(const PartitionTable& table, std::size_t x0, Rng& rng) {
  const auto& T = *table.tensor;
  const std::size_t G = table.G();
  if (x0 >= G) throw InvalidArgument("sample_critical_contacts: start index outside the grid");
  const double eb = std::exp(table.beta);
  const double N = static_cast<double>(table.N);
  std::vector<double> pts;
  std::int64_t t = 0;
  std::size_t x = x0;
  while (t < table.N) {
    const std::int64_t r = table.N - t;
    const double Zr = table.at(r, x);
    const double u = uniform_open(rng) * Zr;
    double acc = table.tail_weight(r, x);
    if (u < acc) break;
    bool moved = false;
    for (std::int64_t n = 1; n <= r && !moved; ++n) {
      double mass = 0.0;
      for (std::size_t y = 0; y < G; ++y) mass += eb * T.at(n, x, y) * T.grid.weight(y) * table.at(r - n, y);
      if (u >= acc + mass) {
        acc += mass;
        continue;
      }
      std::size_t chosen = G - 1;
      for (std::size_t y = 0; y < G; ++y) {
        acc += eb * T.at(n, x, y) * T.grid.weight(y) * table.at(r - n, y);
        if (u < acc) {
          chosen = y;
          break;
        }
      }
      t += n;
      x = chosen;
      pts.push_back(static_cast<double>(t) / N);
      moved = true;
    }
    if (!moved) {
      if (std::abs(acc / Zr - 1.0) > 1e-6)
        throw DiscretizationError("sample_critical_contacts: transition masses do not sum to 1");
      break;
    }
  }
  return ClosedSetSample::from_points(std::move(pts), ClosedSetSample::Source::Wetting);
}

std::vector<ClosedSetSample> sample_critical_paths(const PartitionTable& table, std::size_t x0, std::size_t paths,
                                                   std::uint64_t seed) {
  std::vector<ClosedSetSample> out(paths);
  parallel::for_each_index(paths, [&](std::size_t i) {
    Rng rng = replica_rng(seed, i);
    out[i] = sample_critical_contacts(table, x0, rng);
  });
  return out;
}

Main2Report main2_check(const std::vector<ClosedSetSample>& paths, double s, double t) {
  if (!(s > 0.0 && s < t && t < 1.0)) throw InvalidArgument("main2_check: need 0 < s < t < 1");
  if (paths.empty()) throw InvalidArgument("main2_check: no paths");
  Main2Report r;
  r.s = s;
  r.t = t;
  r.paths = paths.size();
  double boundary = 0.0, beyond = 0.0;
  for (const auto& p : paths) {
    const double d = matheron_functionals(p, s).d;
    if (d < s) r.d_at_least_s = false;
    if (d >= 1.0) boundary += 1.0;
    if (d > t) beyond += 1.0;
  }
  const double n = static_cast<double>(paths.size());
  r.p_boundary = boundary / n;
  r.se_boundary = std::sqrt(r.p_boundary * (1.0 - r.p_boundary) / n);
  r.p_clo = beyond / n;
  r.se_clo = std::sqrt(r.p_clo * (1.0 - r.p_clo) / n);
  r.boundary_limit = clo_boundary(s);
  r.clo_limit = clo_probability(s, t);
  return r;
}

ConstrainedMc partition_mc(const WalkModel& model, double x, double beta, std::int64_t n, std::size_t walks,
                           std::uint64_t seed) {
  model.validate();
  if (n < 0) throw InvalidArgument("partition_mc: n must be >= 0");
  const double a = model.a;
  const auto acc = parallel::replica_reduce(seed, walks, numerics::MeanAccumulator{},
                                            [&](Rng& rng, std::size_t, numerics::MeanAccumulator& m) {
                                              double s = x;
                                              int visits = 0;
                                              for (std::int64_t k = 0; k < n; ++k) {
                                                s += model.sample(rng);
                                                if (s < 0.0) {
                                                  m.add(0.0);
                                                  return;
                                                }
                                                visits += s <= a;
                                              }
                                              m.add(std::exp(beta * visits));
                                            });
  return {acc.mean(), acc.std_error()};
}

}  // namespace mrlab
