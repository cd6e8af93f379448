#include "mrlab/mrp_sim.hpp"

#include <algorithm>
#include <cmath>

#include "mrlab/error.hpp"
#include "mrlab/numerics.hpp"
#include "mrlab/parallel.hpp"

namespace mrlab {

using numerics::kPi;

MrpTrajectory simulate_mrp(const HeavyTailKernel& kernel, std::size_t x0, std::int64_t horizon, Rng& rng) {
  if (x0 >= kernel.size()) throw InvalidArgument("simulate_mrp: start state off grid");
  MrpTrajectory traj;
  traj.horizon = horizon;
  traj.times.push_back(0);
  traj.states.push_back(x0);
  std::int64_t t = 0;
  std::size_t x = x0;
  while (t <= horizon && horizon > 0) {
    const std::size_t y = kernel.sample_next_state(x, rng);
    const std::int64_t step = kernel.sample_interarrival(x, y, rng);
    t = step >= kInterarrivalCap - t ? kInterarrivalCap : t + step;
    traj.times.push_back(t);
    traj.states.push_back(y);
    x = y;
  }
  return traj;
}

double MassFunctionEstimate::total() const {
  double s = 0.0;
  for (double m : cell_masses) s += m;
  return s;
}

TestFunction default_test_function(double b) {
  return [b](double y) { return 1.0 + 0.5 * std::sin(2.0 * kPi * y / b); };
}

std::vector<MassFunctionEstimate> empirical_mass_functions(const HeavyTailKernel& kernel, std::size_t x0,
                                                           std::vector<std::int64_t> horizons,
                                                           std::size_t replicas, std::uint64_t seed,
                                                           std::size_t cells, TestFunction f) {
  if (replicas < 1) throw InvalidArgument("empirical_mass_function: replicas must be >= 1");
  if (horizons.empty()) return {};
  if (!f) f = default_test_function(kernel.grid().length());
  std::sort(horizons.begin(), horizons.end());
  const std::size_t H = horizons.size();
  const std::size_t width = cells + 1;  // cells + test function
  const auto& grid = kernel.grid();
  std::vector<std::size_t> cell(grid.size());
  std::vector<double> fval(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    cell[i] = grid.cell_of(i, cells);
    fval[i] = f(grid.node(i));
  }
  const std::int64_t n_max = horizons.back();

  numerics::CellAccumulator zero(H * width);
  auto acc = parallel::replica_reduce(seed, replicas, zero, [&](Rng& rng, std::size_t, numerics::CellAccumulator& a) {
    std::vector<double> counts(H * width, 0.0);
    auto record = [&](std::int64_t t, std::size_t state) {
      for (std::size_t h = 0; h < H; ++h) {
        if (t > horizons[h]) continue;
        counts[h * width + cell[state]] += 1.0;
        counts[h * width + cells] += fval[state];
      }
    };
    std::int64_t t = 0;
    std::size_t x = x0;
    record(0, x0);
    while (true) {
      const std::size_t y = kernel.sample_next_state(x, rng);
      const std::int64_t step = kernel.sample_interarrival(x, y, rng);
      if (step > n_max - t) break;
      t += step;
      x = y;
      record(t, x);
    }
    a.add(counts);
  });

  const auto means = acc.means();
  const auto ses = acc.std_errors();
  std::vector<MassFunctionEstimate> out(H);
  for (std::size_t h = 0; h < H; ++h) {
    auto& e = out[h];
    e.n = horizons[h];
    e.start = x0;
    e.replicas = replicas;
    e.cell_masses.assign(means.begin() + static_cast<std::ptrdiff_t>(h * width),
                         means.begin() + static_cast<std::ptrdiff_t>(h * width + cells));
    e.std_errors.assign(ses.begin() + static_cast<std::ptrdiff_t>(h * width),
                        ses.begin() + static_cast<std::ptrdiff_t>(h * width + cells));
    e.test_integral = means[h * width + cells];
    e.test_std_error = ses[h * width + cells];
  }
  return out;
}

MassFunctionEstimate empirical_mass_function(const HeavyTailKernel& kernel, std::size_t x0, std::int64_t n,
                                             std::size_t replicas, std::uint64_t seed, std::size_t cells,
                                             TestFunction f) {
  return empirical_mass_functions(kernel, x0, {n}, replicas, seed, cells, std::move(f)).front();
}

double mp2_limit_constant(double alpha, double e_pi2) {
  return alpha / (std::tgamma(1.0 + alpha) * std::tgamma(1.0 - alpha) * e_pi2);
}

namespace {

CellComparison compare(double estimate, double se, double limit) {
  CellComparison c{estimate, se, limit, 0.0, 0.0};
  c.z = se > 0.0 ? (estimate - limit) / se : 0.0;
  c.rel_dev = limit != 0.0 ? std::abs(estimate / limit - 1.0) : std::abs(estimate);
  return c;
}

}  // namespace

Mp2Report mp2_check(const MassFunctionEstimate& estimate, const HeavyTailKernel& kernel,
                    const StationaryMeasure& pi, TestFunction f) {
  const auto& grid = kernel.grid();
  if (!f) f = default_test_function(grid.length());
  const std::size_t cells = estimate.cell_masses.size();
  const double alpha = kernel.alpha();
  const double n = static_cast<double>(estimate.n);
  const double scale = kernel.L()(n) / std::pow(n, alpha);

  Mp2Report r;
  r.n = estimate.n;
  r.limit_constant = mp2_limit_constant(alpha, pi2_expectation(kernel, pi));
  const auto share = cell_masses(grid, pi, cells);
  double total = 0.0, total_var = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    r.cells.push_back(compare(scale * estimate.cell_masses[c], scale * estimate.std_errors[c],
                              r.limit_constant * share[c]));
    r.max_rel_dev = std::max(r.max_rel_dev, r.cells.back().rel_dev);
    total += estimate.cell_masses[c];
    total_var += estimate.std_errors[c] * estimate.std_errors[c];
  }
  // Cells are positively correlated; the summed variance understates the total's SE.
  r.total = compare(scale * total, scale * std::sqrt(total_var), r.limit_constant);
  double f_pi = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) f_pi += grid.weight(i) * pi.density[i] * f(grid.node(i));
  r.test_function = compare(scale * estimate.test_integral, scale * estimate.test_std_error,
                            r.limit_constant * f_pi);
  r.max_rel_dev = std::max(r.max_rel_dev, r.total.rel_dev);
  return r;
}

double LaplaceEstimate::total() const {
  double s = 0.0;
  for (double m : cell_masses) s += m;
  return s;
}

LaplaceEstimate laplace_mass(const HeavyTailKernel& kernel, std::size_t x0, double lambda,
                             std::size_t replicas, std::uint64_t seed, std::size_t cells) {
  if (!(lambda > 0.0)) throw InvalidArgument("laplace_mass: lambda must be positive");
  const auto& grid = kernel.grid();
  const auto t_cut = static_cast<std::int64_t>(std::ceil(-std::log(1e-8) / lambda));
  numerics::CellAccumulator zero(cells);
  auto acc = parallel::replica_reduce(seed, replicas, zero, [&](Rng& rng, std::size_t, numerics::CellAccumulator& a) {
    std::vector<double> sums(cells, 0.0);
    std::int64_t t = 0;
    std::size_t x = x0;
    while (true) {
      const std::size_t y = kernel.sample_next_state(x, rng);
      const std::int64_t step = kernel.sample_interarrival(x, y, rng);
      if (step > t_cut - t) break;
      t += step;
      x = y;
      sums[grid.cell_of(x, cells)] += std::exp(-lambda * static_cast<double>(t));
    }
    a.add(sums);
  });
  return {lambda, acc.means(), acc.std_errors(), replicas};
}

double laplace_prefactor(double alpha, const SlowlyVarying& L, double lambda, double e_pi2) {
  return std::tgamma(1.0 - alpha) * std::pow(lambda, alpha) * L(1.0 / lambda) * e_pi2 / alpha;
}

LaplaceReport laplace_mass_check(const HeavyTailKernel& kernel, const StationaryMeasure& pi, std::size_t x0,
                                 double lambda, std::size_t replicas, std::uint64_t seed, std::size_t cells) {
  LaplaceReport r;
  r.lambda = lambda;
  r.estimate = laplace_mass(kernel, x0, lambda, replicas, seed, cells);
  r.prefactor = laplace_prefactor(kernel.alpha(), kernel.L(), lambda, pi2_expectation(kernel, pi));
  const auto share = cell_masses(kernel.grid(), pi, cells);
  double var = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    r.cells.push_back(compare(r.prefactor * r.estimate.cell_masses[c], r.prefactor * r.estimate.std_errors[c],
                              share[c]));
    r.max_rel_dev = std::max(r.max_rel_dev, r.cells.back().rel_dev);
    var += r.estimate.std_errors[c] * r.estimate.std_errors[c];
  }
  r.total = compare(r.prefactor * r.estimate.total(), r.prefactor * std::sqrt(var), 1.0);
  r.max_rel_dev = std::max(r.max_rel_dev, r.total.rel_dev);
  return r;
}

namespace {

// sum_{n > head} p(n) (1 - e^{-lambda n}) for the common law.
double common_tail_part(const HeavyTailKernel& kernel, double lambda) {
  const auto horizon = static_cast<std::int64_t>(std::ceil(45.0 / lambda));
  const std::int64_t n_sum = std::max(horizon, kernel.n_table());
  const double a = kernel.alpha();
  const auto& L = kernel.L();
  constexpr std::size_t chunk = 4096;
  std::vector<double> partial;
  partial.reserve(static_cast<std::size_t>(n_sum / static_cast<std::int64_t>(chunk)) + 2);
  double block = 0.0;
  std::size_t in_block = 0;
  for (std::int64_t n = HeavyTailKernel::kHeadLength + 1; n <= n_sum; ++n) {
    const double nd = static_cast<double>(n);
    block += L(nd) * std::pow(nd, -1.0 - a) * -std::expm1(-lambda * nd);
    if (++in_block == chunk) {
      partial.push_back(block);
      block = 0.0;
      in_block = 0;
    }
  }
  partial.push_back(block);
  // Beyond n_sum, e^{-lambda n} < e^{-45}: the remainder is the plain tail mass.
  return kernel.tail_const() * numerics::pairwise_sum(partial) + kernel.base_tail(n_sum);
}

double head_part(const HeavyTailKernel& kernel, std::size_t x, std::size_t y, double lambda) {
  double s = 0.0;
  for (int n = 1; n <= HeavyTailKernel::kHeadLength; ++n) s += kernel.pmf(x, y, n) * -std::expm1(-lambda * n);
  return s;
}

}  // namespace

double one_minus_phi(const HeavyTailKernel& kernel, std::size_t x, std::size_t y, double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("one_minus_phi: lambda must be positive");
  return head_part(kernel, x, y, lambda) + common_tail_part(kernel, lambda);
}

std::vector<InterarrivalLaplaceRow> interarrival_laplace_check(const HeavyTailKernel& kernel,
                                                               const std::vector<double>& lambdas,
                                                               std::size_t pair_stride) {
  const double a = kernel.alpha();
  const double limit_factor = std::tgamma(1.0 - a) / a;
  const std::size_t G = kernel.size();
  pair_stride = std::max<std::size_t>(1, pair_stride);
  std::vector<InterarrivalLaplaceRow> rows;
  for (double lambda : lambdas) {
    if (!(lambda > 0.0)) throw InvalidArgument("interarrival_laplace_check: lambda must be positive");
    const double common = common_tail_part(kernel, lambda);
    const double norm = std::pow(lambda, a) * kernel.L()(1.0 / lambda);
    InterarrivalLaplaceRow row;
    row.lambda = lambda;
    bool first = true;
    for (std::size_t x = 0; x < G; x += pair_stride) {
      for (std::size_t y = 0; y < G; y += pair_stride) {
        const double omp = head_part(kernel, x, y, lambda) + common;
        const double limit = kernel.phi(x, y) * limit_factor;
        const double dev = std::abs(kernel.k(x, y) * omp / norm - limit);
        row.sup_abs_dev = std::max(row.sup_abs_dev, dev);
        row.sup_rel_dev = std::max(row.sup_rel_dev, dev / limit);
        if (first) row.scalar_ratio = omp / norm;
        first = false;
      }
    }
    rows.push_back(row);
  }
  return rows;
}

double doney_window_sum(double alpha, const SlowlyVarying& L, double tail_const, std::int64_t n1,
                        std::int64_t n2) {
  const double c = alpha * std::sin(alpha * kPi) / kPi / tail_const;
  double s = 0.0;
  for (std::int64_t n = n1 + 1; n <= n2; ++n) {
    const double nd = static_cast<double>(n);
    s += c / (L(nd) * std::pow(nd, 1.0 - alpha));
  }
  return s;
}

GreenReport green_function_check(const HeavyTailKernel& kernel, std::int64_t n1, std::int64_t n2,
                                 std::size_t replicas, std::uint64_t seed) {
  if (kernel.spec().family != FamilyKind::Separable || kernel.spec().eps != 0.0)
    throw InvalidArgument("green_function_check: requires an unmodulated renewal (separable, eps = 0)");
  if (n1 > n2) throw InvalidArgument("green_function_check: need n1 <= n2");
  GreenReport r;
  r.n1 = n1;
  r.n2 = n2;
  r.analytic = doney_window_sum(kernel.alpha(), kernel.L(), kernel.tail_const(), n1, n2);
  if (n1 == n2) return r;
  numerics::MeanAccumulator zero;
  auto acc = parallel::replica_reduce(seed, replicas, zero, [&](Rng& rng, std::size_t, numerics::MeanAccumulator& a) {
    std::int64_t t = 0;
    double count = 0.0;
    while (true) {
      const std::int64_t step = kernel.sample_interarrival(0, 0, rng);
      if (step > n2 - t) break;
      t += step;
      if (t > n1) count += 1.0;
    }
    a.add(count);
  });
  r.estimate = acc.mean();
  r.std_error = acc.std_error();
  r.rel_dev = std::abs(r.estimate / r.analytic - 1.0);
  r.z = r.std_error > 0.0 ? (r.estimate - r.analytic) / r.std_error : 0.0;
  return r;
}

GreenReport green_function_check(double alpha, const SlowlyVarying& L, std::int64_t n1, std::int64_t n2,
                                 std::size_t replicas, std::uint64_t seed, std::int64_t n_table) {
  KernelSpec spec;
  spec.family = FamilyKind::Separable;
  spec.alpha = alpha;
  spec.L = L;
  spec.eps = 0.0;
  spec.G = 2;
  spec.n_table = n_table;
  return green_function_check(HeavyTailKernel(spec), n1, n2, replicas, seed);
}

ClosedSetSample rescaled_contact_set(const MrpTrajectory& traj, std::int64_t N) {
  if (N < 1) throw InvalidArgument("rescaled_contact_set: N must be >= 1");
  std::vector<double> pts;
  pts.reserve(traj.times.size());
  const double inv = 1.0 / static_cast<double>(N);
  for (std::int64_t t : traj.times) {
    if (t <= N) pts.push_back(static_cast<double>(t) * inv);
  }
  return ClosedSetSample::from_points(std::move(pts), ClosedSetSample::Source::Mrp);
}

}  // namespace mrlab
