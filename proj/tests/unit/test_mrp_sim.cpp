#include <doctest.h>

#include <boost/math/special_functions/zeta.hpp>
#include <cmath>

#include "mrlab/error.hpp"
#include "mrlab/mrp_sim.hpp"
#include "mrlab/numerics.hpp"

using namespace mrlab;
using numerics::kPi;

namespace {

HeavyTailKernel make_kernel(double eps, FamilyKind f = FamilyKind::Separable, std::size_t G = 33) {
  KernelSpec s;
  s.family = f;
  s.eps = eps;
  s.G = G;
  return HeavyTailKernel(s);
}

const double kZeta32 = boost::math::zeta(1.5);

}  // namespace

TEST_SUITE("mrp_sim") {
  TEST_CASE("degenerate horizon") {
    auto k = make_kernel(0.3);
    Rng rng(1);
    const auto t = simulate_mrp(k, 4, 0, rng);
    REQUIRE(t.times.size() == 1);
    CHECK(t.times[0] == 0);
    CHECK(t.states[0] == 4);
  }

  TEST_CASE("trajectory invariants and determinism") {
    auto k = make_kernel(0.3, FamilyKind::Modulated);
    Rng a(11), b(11);
    for (int rep = 0; rep < 50; ++rep) {
      const auto t = simulate_mrp(k, 2, 5000, a);
      const auto u = simulate_mrp(k, 2, 5000, b);
      CHECK(t.times == u.times);
      CHECK(t.states == u.states);
      REQUIRE(t.times.size() == t.states.size());
      for (std::size_t i = 1; i < t.times.size(); ++i) {
        CHECK(t.times[i] > t.times[i - 1]);
        if (i + 1 < t.times.size()) CHECK(t.times[i] <= 5000);
      }
      CHECK(t.times.back() > 5000);
    }
  }

  TEST_CASE("J marginals under the flat kernel pass a chi-square test") {
    auto k = make_kernel(0.0, FamilyKind::Separable, 65);
    const auto& g = k.grid();
    constexpr std::size_t bins = 16;
    std::vector<double> expected(bins, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) expected[g.cell_of(i, bins)] += g.weight(i) / g.length();
    std::vector<double> observed(bins, 0.0);
    const int draws = 100000;
    Rng rng(3);
    for (int d = 0; d < draws; ++d) {
      std::size_t x = 10;
      for (int s = 0; s < 5; ++s) x = k.sample_next_state(x, rng);
      observed[g.cell_of(x, bins)] += 1.0;
    }
    double chi2 = 0.0;
    for (std::size_t c = 0; c < bins; ++c) {
      const double e = expected[c] * draws;
      chi2 += (observed[c] - e) * (observed[c] - e) / e;
    }
    CHECK(chi2 < 30.578);  // chi-square, 15 dof, 1% level
  }

  TEST_CASE("mass function at n = 0 is the starting point") {
    auto k = make_kernel(0.3);
    const auto e = empirical_mass_function(k, 30, 0, 100, 5);
    const std::size_t home = k.grid().cell_of(30, 4);
    for (std::size_t c = 0; c < 4; ++c) CHECK(e.cell_masses[c] == (c == home ? 1.0 : 0.0));
  }

  TEST_CASE("total mass equals the mean renewal count plus one") {
    auto k = make_kernel(0.3, FamilyKind::Modulated);
    const std::size_t replicas = 700;
    const auto e = empirical_mass_function(k, 5, 2000, replicas, 17);
    double count = 0.0;
    for (std::size_t r = 0; r < replicas; ++r) {
      Rng rng = replica_rng(17, r);
      const auto t = simulate_mrp(k, 5, 2000, rng);
      for (auto x : t.times) count += x <= 2000 ? 1.0 : 0.0;
    }
    CHECK(e.total() == doctest::Approx(count / replicas).epsilon(1e-12));
  }

  TEST_CASE("nested mass functions are monotone in n") {
    auto k = make_kernel(0.3);
    const auto es = empirical_mass_functions(k, 0, {10, 100, 1000, 5000}, 500, 8);
    for (std::size_t h = 1; h < es.size(); ++h) {
      for (std::size_t c = 0; c < 4; ++c) CHECK(es[h].cell_masses[c] >= es[h - 1].cell_masses[c]);
    }
  }

  TEST_CASE("mass function converges to the mP2 limit") {
    auto k = make_kernel(0.3);
    const auto pi = stationary_distribution(k);
    const double lim = mp2_limit_constant(0.5, pi2_expectation(k, pi));
    CHECK(lim == doctest::Approx(kZeta32 / kPi).epsilon(1e-10));
    CHECK(lim == doctest::Approx(0.8316).epsilon(1e-4));

    const auto es = empirical_mass_functions(k, 0, {1000, 10000}, 20000, 2024);
    const auto r3 = mp2_check(es[0], k, pi);
    const auto r4 = mp2_check(es[1], k, pi);
    CHECK(es[1].total() == doctest::Approx(kZeta32 * 100.0 / kPi).epsilon(0.10));
    CHECK(r4.max_rel_dev < 0.10);
    CHECK(r4.total.rel_dev < r3.total.rel_dev);
    double sub = 0.0;
    for (const auto& c : r4.cells) sub += c.limit;
    CHECK(sub == doctest::Approx(r4.total.limit).epsilon(1e-12));
    CHECK(r4.test_function.rel_dev < 0.10);
  }

  TEST_CASE("Laplace prefactor") {
    const double v = laplace_prefactor(0.5, SlowlyVarying::constant(), 1e-4, 1.0 / kZeta32);
    CHECK(std::abs(v / (2.0 * std::sqrt(kPi) * 0.01 / kZeta32) - 1.0) < 1e-12);
    CHECK(std::abs(v - 0.013570) < 1e-6);
  }

  TEST_CASE("Laplace mass converges to Pi and agrees with mP2") {
    auto k = make_kernel(0.3);
    const auto pi = stationary_distribution(k);
    const auto lap = laplace_mass_check(k, pi, 0, 1e-3, 20000, 31);
    CHECK(lap.max_rel_dev < 0.10);

    const auto small = laplace_mass(k, 0, 1e-2, 2000, 9);
    const auto big = laplace_mass(k, 0, 1e-1, 2000, 9);
    CHECK(small.total() > big.total());
    CHECK_THROWS_AS(laplace_mass(k, 0, 0.0, 10, 1), InvalidArgument);

    const auto lap4 = laplace_mass_check(k, pi, 0, 1e-4, 10000, 41);
    const auto e = empirical_mass_function(k, 0, 10000, 10000, 41);
    const auto m = mp2_check(e, k, pi);
    CHECK(std::abs(m.total.estimate / m.limit_constant - lap4.total.estimate) < 0.15);
  }

  TEST_CASE("interarrival Laplace transform") {
    auto sep = make_kernel(0.3, FamilyKind::Separable, 17);
    const auto rows = interarrival_laplace_check(sep, {1e-3, 1e-6}, 4);
    const double oracle = 2.0 * std::sqrt(kPi) / kZeta32;
    CHECK(std::abs(oracle - 1.35697) < 1e-5);
    CHECK(std::abs(rows[1].scalar_ratio / oracle - 1.0) < 1e-2);
    CHECK(rows[1].sup_abs_dev < rows[0].sup_abs_dev);
    // z-independence of the separable family: sup deviation is the scalar one
    CHECK(rows[1].sup_rel_dev == doctest::Approx(std::abs(rows[1].scalar_ratio / oracle - 1.0)).epsilon(1e-9));

    // direct series oracle for one lambda
    const double lambda = 1e-3;
    double s = 0.0;
    for (long n = 200000; n >= 1; --n) {
      const double x = static_cast<double>(n);
      s += std::pow(x, -1.5) * -std::expm1(-lambda * x);
    }
    s += 2.0 / std::sqrt(200000.5);
    CHECK(one_minus_phi(sep, 0, 0, lambda) == doctest::Approx(s / kZeta32).epsilon(1e-9));

    auto mod = make_kernel(0.3, FamilyKind::Modulated, 17);
    const auto mrows = interarrival_laplace_check(mod, {1e-3, 1e-6}, 4);
    CHECK(mrows[1].sup_rel_dev < mrows[0].sup_rel_dev);
    CHECK(mrows[1].sup_rel_dev < 2e-2);
  }

  TEST_CASE("renewal Green function window") {
    const double C = 1.0 / kZeta32;
    double oracle = 0.0;
    for (int n = 9001; n <= 10000; ++n) oracle += kZeta32 / (2.0 * kPi) / std::sqrt(static_cast<double>(n));
    CHECK(oracle == doctest::Approx(4.27).epsilon(0.01));
    CHECK(doney_window_sum(0.5, SlowlyVarying::constant(), C, 9000, 10000) == doctest::Approx(oracle).epsilon(1e-12));

    const auto r = green_function_check(0.5, SlowlyVarying::constant(), 9000, 10000, 20000, 77);
    CHECK(r.rel_dev < 0.10);
    const auto empty = green_function_check(0.5, SlowlyVarying::constant(), 500, 500, 10, 1);
    CHECK(empty.analytic == 0.0);
    CHECK(empty.estimate == 0.0);
    CHECK_THROWS_AS(green_function_check(make_kernel(0.3), 10, 20, 10, 1), InvalidArgument);
  }

  TEST_CASE("rescaled contact set") {
    MrpTrajectory t;
    t.times = {0, 3, 7, 12};
    t.states = {0, 0, 0, 0};
    auto s = rescaled_contact_set(t, 10);
    REQUIRE(s.points.size() == 3);
    CHECK(s.points[1] == doctest::Approx(0.3));
    CHECK(s.points[2] == doctest::Approx(0.7));
    t.times = {0, 10};
    s = rescaled_contact_set(t, 10);
    CHECK(s.points == std::vector<double>{0.0, 1.0});
    CHECK(s.valid());
  }
}
