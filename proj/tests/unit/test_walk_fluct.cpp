#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mrlab/error.hpp"
#include "mrlab/numerics.hpp"
#include "mrlab/walk_fluct.hpp"

using namespace mrlab;
using numerics::kPi;

namespace {

const WalkModel kGauss = WalkModel::gaussian(1.0, 1.0);

const LadderTailTable& gauss_ladders() {
  static const LadderTailTable t = ladder_tail_table(kGauss, 100000, 11);
  return t;
}

const ConstrainedKernelTensor& small_tensor() {
  static const ConstrainedKernelTensor t = [] {
    ConstrainedKernelOptions o;
    o.G = 16;
    o.n_max = 512;
    return constrained_kernel(kGauss, o, gauss_ladders());
  }();
  return t;
}

}  // namespace

TEST_SUITE("walk_fluct") {
  TEST_CASE("increment laws have mean 0 and variance sigma^2") {
    for (auto m : {WalkModel::gaussian(1.3, 1.0), WalkModel::uniform(0.8, 0.5), WalkModel::laplace(2.0, 1.0)}) {
      const double r = m.support_radius();
      const double mass = numerics::integrate([&](double z) { return m.pdf(z); }, -r, r, 1e-12, 30);
      const double mean = numerics::integrate([&](double z) { return z * m.pdf(z); }, -r, r, 1e-12, 30);
      const double var = numerics::integrate([&](double z) { return z * z * m.pdf(z); }, -r, r, 1e-12, 30);
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(std::abs(mean) < 1e-9);
      CHECK(var == doctest::Approx(m.sigma * m.sigma).epsilon(1e-8));
      CHECK(m.cdf(0.3) - m.cdf(-0.2) ==
            doctest::Approx(numerics::integrate([&](double z) { return m.pdf(z); }, -0.2, 0.3)).epsilon(1e-10));
    }
  }

  TEST_CASE("model validation and json") {
    CHECK_THROWS_AS(WalkModel::gaussian(0.0, 1.0).validate(), InvalidArgument);
    CHECK_THROWS_AS(WalkModel::gaussian(1.0, -1.0).validate(), InvalidArgument);
    CHECK_THROWS_AS(WalkModel::uniform(0.5, 1.0).validate(), InvalidArgument);
    const auto m = WalkModel::from_json(WalkModel::laplace(1.5, 0.7).to_json());
    CHECK(m.kind == WalkModel::Kind::Laplace);
    CHECK(m.sigma == 1.5);
    CHECK(m.a == 0.7);
    CHECK_THROWS_AS(WalkModel::from_json({{"kind", "gaussian"}, {"scale", 1.0}}), InvalidArgument);
    CHECK_THROWS_AS(WalkModel::from_json({{"kind", "cauchy"}}), InvalidArgument);
  }

  TEST_CASE("sample_ladder basics") {
    Rng rng(5);
    CHECK_THROWS_AS(sample_ladder(kGauss, 1000, rng), InvalidArgument);
    const int n = 100000;
    int first = 0;
    for (int i = 0; i < n; ++i) {
      const auto s = sample_ladder(WalkModel::laplace(1.0, 1.0), 1'000'000, rng);
      REQUIRE(s.H1 > 0.0);
      REQUIRE(s.H1m > 0.0);
      REQUIRE(s.T1 >= 1);
      REQUIRE(s.T1m >= 1);
      first += s.T1 == 1;
    }
    const double p = static_cast<double>(first) / n;
    CHECK(std::abs(p - 0.5) < 3.0 * std::sqrt(0.25 / n));

    Rng r1(99), r2(99);
    const auto a = sample_ladder(kGauss, 1'000'000, r1);
    const auto b = sample_ladder(kGauss, 1'000'000, r2);
    CHECK(a.H1 == b.H1);
    CHECK(a.T1m == b.T1m);
  }

  TEST_CASE("mean ascending ladder height is sigma / sqrt 2") {
    const auto& t = gauss_ladders();
    CHECK(std::abs(t.mean_ascending() - 1.0 / std::sqrt(2.0)) < 3.0 * t.mean_ascending_se());
    CHECK(t.cap_rate() < 1e-3);
    CHECK_FALSE(t.cap_warning());
  }

  TEST_CASE("ladder tails") {
    const auto& t = gauss_ladders();
    const std::vector<double> pts = {0.0, 0.1, 0.25, 0.5, 1.0, 2.0};
    const auto rows = ladder_tail_probs(t, pts);
    CHECK(rows[0].p_ascending == 1.0);
    CHECK(rows[0].p_descending == 1.0);
    for (const auto& r : rows) {
      CHECK(std::abs(r.p_ascending - r.p_descending) <= 3.0 * std::hypot(r.se_ascending, r.se_descending) + 1e-12);
    }
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].p_ascending <= rows[i - 1].p_ascending);
    const std::vector<double> bad = {-0.1};
    CHECK_THROWS_AS(ladder_tail_probs(t, bad), InvalidArgument);
    // Both tails evaluated at 0, as for a vanishing strip.
    CHECK(phi_a(kGauss, t, kGauss.a, kGauss.a) == doctest::Approx(1.0 / std::sqrt(2.0 * kPi)).epsilon(1e-14));
    CHECK(1.0 / std::sqrt(2.0 * kPi) == doctest::Approx(0.39894).epsilon(1e-5));
  }

  TEST_CASE("ladder tails are reproducible") {
    const auto a = ladder_tail_table(kGauss, 2000, 3);
    const auto b = ladder_tail_table(kGauss, 2000, 3);
    CHECK(a.ascending == b.ascending);
    CHECK(a.descending == b.descending);
  }

  TEST_CASE("renewal functions") {
    std::vector<double> grid;
    for (int i = 0; i <= 16; ++i) grid.push_back(i / 16.0);
    const auto r = renewal_function_estimate(kGauss, grid, 20000, 64, 8);
    CHECK(r.U_values[0] == 1.0);
    CHECK(r.V_values[0] == 1.0);
    CHECK(r.truncated_fraction <= 1e-3);
    for (std::size_t i = 1; i < grid.size(); ++i) {
      CHECK(r.U_values[i] >= r.U_values[i - 1]);
      CHECK(r.V_values[i] >= r.V_values[i - 1]);
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
      for (std::size_t j = 1; i + j < grid.size(); ++j) {
        const double slack = 3.0 * (r.U_se[i] + r.U_se[j] + r.U_se[i + j]);
        CHECK(r.U_values[i + j] <= r.U_values[i] + r.U_values[j] + slack);
      }
    }
    // U(x) ~ x / E[H1] for large x; at x = 1 the renewal theorem overshoot is still small.
    CHECK(r.U_values.back() > 1.0 + 0.5 / (1.0 / std::sqrt(2.0)));
  }

  TEST_CASE("constrained kernel: first steps") {
    const auto& t = small_tensor();
    const std::size_t G = t.G();
    for (std::size_t x = 0; x < G; ++x)
      for (std::size_t y = 0; y < G; ++y) CHECK(t.at(1, x, y) == kGauss.pdf(t.grid.node(y) - t.grid.node(x)));

    const double M = t.M;
    for (std::size_t x : {std::size_t{0}, G / 2, G - 1}) {
      for (std::size_t y : {std::size_t{0}, G / 3, G - 1}) {
        const double xv = t.grid.node(x), yv = t.grid.node(y);
        const double direct = numerics::integrate(
            [&](double u) { return kGauss.pdf(u - xv) * kGauss.pdf(yv - u); }, kGauss.a, std::min(M, kGauss.a + 12.0));
        CHECK(std::abs(t.at(2, x, y) / direct - 1.0) < 5e-3);
      }
    }
  }

  TEST_CASE("constrained kernel: balance, positivity, survival") {
    const auto& t = small_tensor();
    const std::size_t G = t.G();
    for (std::size_t x = 0; x < G; ++x) {
      CHECK(t.mass_balance[x] >= 0.999);
      CHECK(t.mass_balance[x] <= 1.001);
      CHECK(t.defect[x] > 0.0);
      CHECK(t.truncation[x] < 1e-8);
      for (std::int64_t n = 1; n < t.n_max; ++n) CHECK(t.survival_at(n + 1, x) <= t.survival_at(n, x));
    }
    CHECK(*std::min_element(t.f.begin(), t.f.end()) >= 0.0);
    CHECK(*std::min_element(t.phi.begin(), t.phi.end()) > 0.0);
    for (std::size_t x = 0; x < G; ++x) CHECK(t.fbar_at(0, x) + t.defect[x] == doctest::Approx(t.mass_balance[x]));
  }

  TEST_CASE("constrained kernel: time-reversal symmetry of Phi_a") {
    const auto& t = small_tensor();
    const auto& lad = gauss_ladders();
    const std::size_t G = t.G();
    for (std::size_t x = 0; x < G; x += 3) {
      for (std::size_t y = 0; y < G; y += 2) {
        const double rx = kGauss.a - t.grid.node(x), ry = kGauss.a - t.grid.node(y);
        const double rel = std::hypot(lad.se_ascending(rx) / lad.tail_ascending(rx),
                                      lad.se_descending(ry) / lad.tail_descending(ry));
        CHECK(std::abs(t.phi_at(x, y) / t.phi_at(y, x) - 1.0) < 3.0 * std::sqrt(2.0) * rel);
      }
    }
  }

  TEST_CASE("constrained kernel: parameter checks") {
    ConstrainedKernelOptions o;
    o.G = 16;
    o.n_max = 64;
    o.M = kGauss.a + 5.0 * std::sqrt(64.0);
    CHECK_THROWS_AS(constrained_kernel(kGauss, o, gauss_ladders()), InvalidArgument);
    o.M = 0.0;
    o.halfline_cells = 32;
    CHECK_THROWS_AS(constrained_kernel(kGauss, o, gauss_ladders()), InvalidArgument);
  }

  TEST_CASE("constrained kernel vs direct Monte Carlo") {
    const auto& t = small_tensor();
    const std::size_t bins = 4;
    double previous = 1.0;
    for (std::int64_t n = 1; n <= 8; ++n) {
      for (std::size_t x : {std::size_t{0}, t.G() - 1}) {
        const double xv = t.grid.node(x);
        const auto mc = constrained_kernel_mc(kGauss, xv, n, bins, 400000, 100 + static_cast<std::uint64_t>(n));
        std::vector<double> row(t.G());
        for (std::size_t y = 0; y < t.G(); ++y) row[y] = t.at(n, x, y);
        double total = 0.0;
        for (std::size_t b = 0; b < bins; ++b) {
          const double lo = kGauss.a * b / bins, hi = kGauss.a * (b + 1) / bins;
          const double q = strip_integral(t.grid, row, lo, hi);
          total += q;
          CHECK(std::abs(mc.bin_mass[b] - q) < 3.0 * mc.bin_se[b]);
        }
        if (n == 1) {
          const double exact = 0.5 * (std::erf((kGauss.a - xv) / std::sqrt(2.0)) + std::erf(xv / std::sqrt(2.0)));
          CHECK(std::abs(mc.acceptance - exact) < 3.0 * mc.acceptance_se);
        }
        if (x == 0) {
          CHECK(mc.acceptance < previous);
          previous = mc.acceptance;
        }
        CHECK(std::abs(mc.acceptance - total) < 3.0 * mc.acceptance_se);
      }
    }
    CHECK_THROWS_AS(constrained_kernel_mc(kGauss, 0.0, 17, 4, 100, 1), InvalidArgument);
  }

  TEST_CASE("local limit for the constrained kernel") {
    ConstrainedKernelOptions o;
    o.G = 32;
    o.n_max = 512;
    const auto t = constrained_kernel(kGauss, o, gauss_ladders());
    const auto rep = thm_pr_check(t, {64, 512});
    CHECK(rep.rows[1].e < 0.10);
    CHECK(rep.rows[1].e < rep.rows[0].e);
    CHECK(rep.decreasing);
    CHECK_THROWS_AS(thm_pr_check(t, {1}), InvalidArgument);
    CHECK_THROWS_AS(thm_pr_check(t, {513}), InvalidArgument);
  }

  TEST_CASE("local limit for the walk killed above x") {
    std::vector<double> grid;
    for (int i = 0; i <= 32; ++i) grid.push_back(i / 32.0);
    const auto ren = renewal_function_estimate(kGauss, grid, 20000, 64, 21);
    const auto r = doney_local_check(kGauss, 0.5, 0.5, 0.25, 256, 10'000'000, 5, ren);
    CHECK(r.estimate >= 0.0);
    CHECK(std::abs(r.ratio - 1.0) < 0.25);
    const auto narrow = doney_local_check(kGauss, 0.5, 0.5, 0.1, 64, 1'000'000, 6, ren);
    const auto wide = doney_local_check(kGauss, 0.5, 0.5, 0.2, 64, 1'000'000, 6, ren);
    CHECK(std::abs(wide.estimate / narrow.estimate - 2.0) < 0.3);
  }

  TEST_CASE("duality lemma") {
    for (std::int64_t m = 1; m <= 6; ++m) {
      for (double lo : {0.0, 0.5, 1.0}) {
        const auto r = duality_check(kGauss, m, lo, lo + 0.5, 100000, 40 + static_cast<std::uint64_t>(m));
        CHECK(std::abs(r.z) < 3.0);
        CHECK(r.meander > 0.0);
      }
    }
    const auto r = duality_check(WalkModel::laplace(1.0, 1.0), 4, 0.25, 0.75, 200000, 77);
    CHECK(std::abs(r.z) < 3.0);
  }
}
