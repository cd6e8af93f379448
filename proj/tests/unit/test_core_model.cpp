#include <doctest.h>

#include <boost/math/special_functions/zeta.hpp>
#include <cmath>

#include "mrlab/core_model.hpp"
#include "mrlab/error.hpp"

using namespace mrlab;

namespace {

KernelSpec spec_with(FamilyKind f, double eps, std::size_t G = 33) {
  KernelSpec s;
  s.family = f;
  s.eps = eps;
  s.G = G;
  return s;
}

}  // namespace

TEST_SUITE("core_model") {
  TEST_CASE("state grid invariants") {
    StateGrid g(2.0, 17);
    double total = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(g.weight(i) > 0.0);
      if (i > 0) CHECK(g.node(i) > g.node(i - 1));
      total += g.weight(i);
    }
    CHECK(total == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(g.node(0) == 0.0);
    CHECK(g.node(16) == 2.0);
    CHECK_THROWS_AS(StateGrid(1.0, 1), InvalidArgument);
    CHECK_THROWS_AS(StateGrid(0.0, 4), InvalidArgument);
  }

  TEST_CASE("tail index and slowly varying validation") {
    CHECK_THROWS_AS(TailIndex(0.0), InvalidArgument);
    CHECK_THROWS_AS(TailIndex(1.0), InvalidArgument);
    CHECK_NOTHROW(TailIndex(0.3));
    CHECK_THROWS_AS(SlowlyVarying::constant(-1.0).validate(), InvalidArgument);

    const auto L = SlowlyVarying::log_power(2.0, 1.5);
    double prev = 1e9;
    for (double n : {1e2, 1e4, 1e8, 1e16}) {
      CHECK(L(n) > 0.0);
      const double dev = std::abs(L(3.0 * n) / L(n) - 1.0);
      CHECK(dev < prev);
      prev = dev;
    }
    CHECK(prev < 0.05);
  }

  TEST_CASE("tail constant at alpha 1/2 is 1/zeta(3/2)") {
    HeavyTailKernel k(spec_with(FamilyKind::Separable, 0.0));
    const double oracle = 1.0 / boost::math::zeta(1.5);
    CHECK(k.tail_const() == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(k.tail_const() == doctest::Approx(0.382793).epsilon(1e-6));
  }

  TEST_CASE("unmodulated kernel is flat") {
    HeavyTailKernel k(spec_with(FamilyKind::Separable, 0.0));
    for (std::size_t x = 0; x < k.size(); x += 5) {
      for (std::size_t y = 0; y < k.size(); y += 7) {
        CHECK(k.k(x, y) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(k.phi(x, y) == doctest::Approx(k.tail_const()).epsilon(1e-14));
      }
    }
  }

  TEST_CASE("rows of k are probability densities") {
    for (auto fam : {FamilyKind::Separable, FamilyKind::Modulated}) {
      HeavyTailKernel k(spec_with(fam, 0.7));
      const auto& g = k.grid();
      for (std::size_t x = 0; x < k.size(); ++x) {
        double s = 0.0;
        for (std::size_t y = 0; y < k.size(); ++y) {
          CHECK(k.k(x, y) > 0.0);
          s += g.weight(y) * k.k(x, y);
        }
        CHECK(std::abs(s - 1.0) < 1e-10);
      }
    }
  }

  TEST_CASE("interarrival laws are non-defective") {
    HeavyTailKernel k(spec_with(FamilyKind::Modulated, 0.3));
    for (auto [x, y] : {std::pair<std::size_t, std::size_t>{0, 0}, {3, 20}, {32, 11}}) {
      double s = 0.0;
      for (std::int64_t n = 1; n <= k.n_table(); ++n) s += k.pmf(x, y, n);
      s += k.base_tail(k.n_table());
      CHECK(std::abs(s - 1.0) < 1e-10);
      for (std::int64_t n = 1; n <= HeavyTailKernel::kHeadLength; ++n) CHECK(k.pmf(x, y, n) > 0.0);
    }
  }

  TEST_CASE("tail law n^{1+a} p(n) / L(n) -> C") {
    HeavyTailKernel k(spec_with(FamilyKind::Separable, 0.0));
    const double n = 1e6;
    const double ratio = std::pow(n, 1.5) * k.base_pmf(static_cast<std::int64_t>(n)) / k.tail_const();
    CHECK(std::abs(ratio - 1.0) < 1e-3);
  }

  TEST_CASE("modulated family satisfies the uniform tail equivalence") {
    HeavyTailKernel k(spec_with(FamilyKind::Modulated, 0.5));
    const std::int64_t n = 100000;
    double worst = 0.0;
    for (std::size_t x = 0; x < k.size(); ++x) {
      for (std::size_t y = 0; y < k.size(); ++y) {
        const double r = std::pow(static_cast<double>(n), 1.5) * k.joint(x, y, n) / (k.L()(n) * k.phi(x, y));
        worst = std::max(worst, std::abs(r - 1.0));
      }
    }
    CHECK(worst < 1e-2);
    // the head really depends on the pair
    CHECK(k.pmf(2, 7, 1) != doctest::Approx(k.pmf(7, 2, 1)).epsilon(1e-6));
  }

  TEST_CASE("log-power tail constant normalizes the law") {
    KernelSpec s = spec_with(FamilyKind::Separable, 0.2, 9);
    s.alpha = 0.6;
    s.L = SlowlyVarying::log_power(1.0, 1.0);
    HeavyTailKernel k(s);
    // independent normalization: direct sum to 1e7 plus integral remainder by substitution
    double sum = 0.0;
    for (std::int64_t n = 10'000'000; n >= 1; --n) {
      const double x = static_cast<double>(n);
      sum += (1.0 + std::log(x)) * std::pow(x, -1.6);
    }
    // int_{M}^inf (1 + log x) x^{-1.6} dx = M^{-0.6} ((1 + log M)/0.6 + 1/0.36), M = 1e7 + 1/2
    const double M = 1e7 + 0.5;
    sum += std::pow(M, -0.6) * ((1.0 + std::log(M)) / 0.6 + 1.0 / 0.36);
    CHECK(k.tail_const() == doctest::Approx(1.0 / sum).epsilon(1e-7));
  }

  TEST_CASE("stationary measure of the cosine family is uniform") {
    for (auto fam : {FamilyKind::Separable, FamilyKind::Modulated}) {
      HeavyTailKernel k(spec_with(fam, 0.3));
      const auto pi = stationary_distribution(k);
      CHECK(pi.total == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(pi.residual < 1e-8);
      for (double d : pi.density) CHECK(std::abs(d - 1.0) < 1e-8);
      CHECK(pi2_expectation(k, pi) == doctest::Approx(k.tail_const()).epsilon(1e-10));
      const auto cells = cell_masses(k.grid(), pi, 4);
      double s = 0.0;
      for (double c : cells) s += c;
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("pi2 expectation is linear in Phi") {
    KernelSpec s = spec_with(FamilyKind::Separable, 0.4);
    HeavyTailKernel k(s);
    const auto pi = stationary_distribution(k);
    const double e = pi2_expectation(k, pi);
    s.L = SlowlyVarying::constant(2.0);
    HeavyTailKernel k2(s);
    // L scaled by 2 halves C, so Phi scales by 1/2
    CHECK(pi2_expectation(k2, pi) == doctest::Approx(0.5 * e).epsilon(1e-12));
  }

  TEST_CASE("interarrival sampler reproduces the tail") {
    HeavyTailKernel k(spec_with(FamilyKind::Separable, 0.0, 3));
    Rng rng(20240601);
    const int draws = 1'000'000;
    int over10 = 0, over100 = 0;
    for (int i = 0; i < draws; ++i) {
      const auto n = k.sample_interarrival(0, 1, rng);
      over10 += n > 10;
      over100 += n > 100;
    }
    const double C = 1.0 / boost::math::zeta(1.5);
    for (auto [m, count] : {std::pair<int, int>{10, over10}, {100, over100}}) {
      double head = 0.0;
      for (int n = 1; n <= m; ++n) head += C * std::pow(static_cast<double>(n), -1.5);
      const double p = 1.0 - head;
      const double se = std::sqrt(p * (1.0 - p) / draws);
      CAPTURE(m);
      CHECK(std::abs(static_cast<double>(count) / draws - p) < 3.0 * se);
    }
  }

  TEST_CASE("draws beyond the table follow the exact tail") {
    KernelSpec s = spec_with(FamilyKind::Separable, 0.0, 3);
    s.n_table = 1000;
    HeavyTailKernel k(s);
    Rng rng(5);
    const int draws = 400'000;
    int over = 0;
    for (int i = 0; i < draws; ++i) over += k.sample_interarrival(1, 2, rng) > 20000;
    double head = 0.0;
    const double C = 1.0 / boost::math::zeta(1.5);
    for (int n = 1; n <= 20000; ++n) head += C * std::pow(static_cast<double>(n), -1.5);
    const double p = 1.0 - head;
    CHECK(std::abs(static_cast<double>(over) / draws - p) < 3.0 * std::sqrt(p * (1 - p) / draws));
  }

  TEST_CASE("sampling is deterministic in the seed") {
    HeavyTailKernel k(spec_with(FamilyKind::Modulated, 0.3, 9));
    Rng a(77), b(77);
    for (int i = 0; i < 1000; ++i) {
      CHECK(k.sample_next_state(3, a) == k.sample_next_state(3, b));
      CHECK(k.sample_interarrival(3, 4, a) == k.sample_interarrival(3, 4, b));
    }
  }

  TEST_CASE("kernel spec json") {
    KernelSpec s = spec_with(FamilyKind::Modulated, 0.25, 17);
    s.L = SlowlyVarying::log_power(1.5, -0.5);
    const auto back = KernelSpec::from_json(s.to_json());
    CHECK(back.family == FamilyKind::Modulated);
    CHECK(back.eps == 0.25);
    CHECK(back.G == 17);
    CHECK(back.L.kind == SlowlyVarying::Kind::LogPower);
    CHECK(back.L.p == -0.5);
    auto j = s.to_json();
    j["bogus"] = 1;
    CHECK_THROWS_AS(KernelSpec::from_json(j), InvalidArgument);
  }

  TEST_CASE("invalid kernels are rejected") {
    CHECK_THROWS_AS(HeavyTailKernel(spec_with(FamilyKind::Separable, 1.0)), InvalidArgument);
    KernelSpec s;
    s.alpha = 1.2;
    CHECK_THROWS_AS(HeavyTailKernel{s}, InvalidArgument);
  }
}
