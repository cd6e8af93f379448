// Desk-scale acceptance run. Prints one PASS/FAIL line per criterion with the
// measured values and the wall time against the budget; exit status is 0 only
// when every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mrlab/core_model.hpp"
#include "mrlab/mrp_sim.hpp"
#include "mrlab/numerics.hpp"
#include "mrlab/parallel.hpp"
#include "mrlab/regen_limit.hpp"
#include "mrlab/rng.hpp"
#include "mrlab/walk_fluct.hpp"
#include "mrlab/wetting.hpp"

using namespace mrlab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool pass = o.pass && dt < budget_s;
  if (!pass) ++failures;
  std::printf("%s  %2d %-18s %s  [%.1f s / %.0f s]\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), dt,
              budget_s);
  std::fflush(stdout);
}

std::string f(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

KernelSpec separable_spec() {
  KernelSpec s;
  s.family = FamilyKind::Separable;
  s.alpha = 0.5;
  s.eps = 0.3;
  s.G = 33;
  return s;
}

const WalkModel kGauss = WalkModel::gaussian(1.0, 1.0);

ConstrainedKernelTensor build_tensor(std::size_t G) {
  ConstrainedKernelOptions o;
  o.G = G;
  o.n_max = 4096;
  o.seed = 2024 + G;
  return constrained_kernel(kGauss, o);
}

}  // namespace

int main() {
  const std::uint64_t seed = 20240601;
  const HeavyTailKernel kernel(separable_spec());
  const auto pi = stationary_distribution(kernel);
  const double zeta_over_pi = 2.6123753486854883 / numerics::kPi;

  criterion(1, "mass-function", 120, [&] {
    const auto est = empirical_mass_function(kernel, 0, 10000, 20000, derive_seed(seed, 1));
    const auto r = mp2_check(est, kernel, pi);
    const bool pass = r.total.rel_dev < 0.10 && r.max_rel_dev < 0.10 &&
                      std::abs(r.limit_constant - zeta_over_pi) < 1e-3;
    return Outcome{pass, f("limit=%.4f total=%.4f rel=%.3f max_cell_rel=%.3f", r.limit_constant,
                           r.total.estimate, r.total.rel_dev, r.max_rel_dev)};
  });

  criterion(2, "laplace-mass", 120, [&] {
    const auto r = laplace_mass_check(kernel, pi, 0, 1e-3, 20000, derive_seed(seed, 2));
    return Outcome{r.max_rel_dev < 0.10 && r.total.rel_dev < 0.10,
                   f("total=%.4f limit=%.4f max_cell_rel=%.3f", r.total.estimate, r.total.limit, r.max_rel_dev)};
  });

  criterion(3, "interarrival-lt", 10, [&] {
    const auto rows = interarrival_laplace_check(kernel, {1e-6}, 1);
    return Outcome{rows[0].sup_rel_dev < 0.01, f("sup_rel_dev(1e-6)=%.2e", rows[0].sup_rel_dev)};
  });

  criterion(4, "renewal-window", 60, [&] {
    const auto g = green_function_check(0.5, SlowlyVarying::constant(), 9000, 10000, 20000, derive_seed(seed, 4));
    return Outcome{g.rel_dev < 0.10,
                   f("estimate=%.3f analytic=%.3f rel=%.3f", g.estimate, g.analytic, g.rel_dev)};
  });

  criterion(5, "contact-set-law", 180, [&] {
    const std::int64_t N = 10000;
    const std::size_t n = 5000;
    std::vector<double> d(n);
    parallel::for_each_index(n, [&](std::size_t i) {
      Rng rng = replica_rng(derive_seed(seed, 5), i);
      d[i] = matheron_functionals(rescaled_contact_set(simulate_mrp(kernel, 0, N, rng), N), 0.3).d;
    });
    std::sort(d.begin(), d.end());
    const auto ks = ks_test(d, [](double y) { return y <= 0.3 ? 0.0 : dt_law_cdf(0.5, 0.3, y); }, 0.01, 1.0, 0.03);
    const double point = 1.0 - dt_law_cdf(0.5, 1.0, 2.0);
    return Outcome{ks.statistic < 0.03 && std::abs(point - 0.5) < 1e-10,
                   f("ks=%.4f P(d_1>2)=%.12f", ks.statistic, point)};
  });

  std::optional<ConstrainedKernelTensor> t32;
  criterion(6, "constrained-kernel", 300, [&] {
    t32.emplace(build_tensor(32));
    const auto& t = *t32;
    const auto rep = thm_pr_check(t, {64, 512});
    const double e64 = rep.rows[0].e, e512 = rep.rows[1].e;
    double worst = 0.0;
    for (std::int64_t n = 1; n <= 8; ++n) {
      for (std::size_t x : {std::size_t{0}, t.G() / 2, t.G() - 1}) {
        const auto mc = constrained_kernel_mc(kGauss, t.grid.node(x), n, 4, 1'000'000,
                                              derive_seed(seed, 600 + static_cast<std::uint64_t>(n) * 64 + x));
        std::vector<double> row(t.G());
        for (std::size_t y = 0; y < t.G(); ++y) row[y] = t.at(n, x, y);
        for (std::size_t b = 0; b < 4; ++b) {
          const double q = strip_integral(t.grid, row, 0.25 * static_cast<double>(b), 0.25 * static_cast<double>(b + 1));
          worst = std::max(worst, std::abs(mc.bin_mass[b] - q) / mc.bin_se[b]);
        }
      }
    }
    return Outcome{e512 < 0.10 && e512 < e64 && worst < 3.0,
                   f("e(64)=%.4f e(512)=%.4f max|z|=%.2f", e64, e512, worst)};
  });

  criterion(7, "critical-point", 120, [&] {
    const double b32 = beta_critical(*t32);
    const double b64 = beta_critical(build_tensor(64));
    return Outcome{std::abs(b32 - b64) < 1e-3 && b32 > 0.0,
                   f("beta_c(32)=%.8f beta_c(64)=%.8f diff=%.2e", b32, b64, std::abs(b32 - b64))};
  });

  const double bc = beta_critical(*t32);

  criterion(8, "tilted-rows", 60, [&] {
    const auto K0 = tilted_kernel(*t32, bc, bc, 1.0);
    const auto K1 = tilted_kernel(*t32, bc - 0.2, bc, 1.0);
    double e0 = 0.0, e1 = 0.0;
    for (double m : K0.row_masses) e0 = std::max(e0, std::abs(m - 1.0));
    for (double m : K1.row_masses) e1 = std::max(e1, std::abs(m - std::exp(-0.2)));
    return Outcome{e0 < 1e-2 && e1 < 1e-2, f("dev(beta_c)=%.2e dev(beta_c-0.2)=%.2e", e0, e1)};
  });

  criterion(9, "critical-partition", 180, [&] {
    const auto sp = spectral_radius(build_blambda(*t32, 0.0, TailMode::PhiTail));
    const auto Z = partition_table(*t32, bc, 800);
    const auto r = estz_check(Z, sp, {400, 500, 600, 700, 800});
    return Outcome{r.max_variation < 0.03 && r.max_deviation < 0.10 && r.max_cross_x < 0.02,
                   f("variation=%.4f deviation=%.4f cross_x=%.4f (C=%.5f)", r.max_variation, r.max_deviation,
                     r.max_cross_x, r.C)};
  });

  criterion(10, "critical-contacts", 600, [&] {
    const auto Z = partition_table(*t32, bc, 2000);
    const auto paths = sample_critical_paths(Z, 0, 5000, derive_seed(seed, 10));
    const auto r = main2_check(paths, 0.25, 0.75);
    const auto mc = clo_mc_oracle(0.25, 0.75, 100000, 1e-3, derive_seed(seed, 11));
    const double clo = clo_probability(0.25, 0.75);
    const bool pass = std::abs(r.p_boundary - 0.5) <= 0.03 && std::abs(r.p_clo - clo) <= 0.03 &&
                      std::abs(mc.estimate - clo) < 3.0 * mc.std_error;
    return Outcome{pass, f("P(d>=1)=%.4f P(d>0.75)=%.4f quad=%.4f oracle=%.4f+-%.4f", r.p_boundary, r.p_clo, clo,
                           mc.estimate, mc.std_error)};
  });

  criterion(11, "deterministic-sum", 30, [&] {
    const auto p = dcg_pair(0.25, 0.75, 100000);
    const double rel = std::abs(p.finite_sum / p.limit - 1.0);
    return Outcome{rel < 0.02, f("sum=%.5f limit=%.5f rel=%.4f", p.finite_sum, p.limit, rel)};
  });

  criterion(12, "free-energy", 120, [&] {
    bool zero = true, increasing = true, bounded = true;
    for (double off = -1.0; off <= 1e-12; off += 0.125) {
      const double F = free_energy(*t32, bc + off, bc, 1e-10);
      zero = zero && F == 0.0;
      bounded = bounded && F <= std::max(bc + off, 0.0);
    }
    double prev = 0.0;
    for (double off : {0.05, 0.1, 0.25, 0.5, 1.0, 2.0}) {
      const double F = free_energy(*t32, bc + off, bc, 1e-10);
      increasing = increasing && F > prev;
      bounded = bounded && F <= std::max(bc + off, 0.0);
      prev = F;
    }
    return Outcome{zero && increasing && bounded,
                   f("zero=%d increasing=%d bounded=%d F(beta_c+2)=%.5f", zero, increasing, bounded, prev)};
  });

  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
