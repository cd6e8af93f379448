#include <doctest.h>

#include <cmath>
#include <vector>

#include "mrlab/numerics.hpp"
#include "mrlab/parallel.hpp"

using namespace mrlab;
using numerics::kPi;

TEST_SUITE("numerics") {
  TEST_CASE("pairwise sum of many small terms") {
    std::vector<double> v(1 << 20, 0.1);
    CHECK(numerics::pairwise_sum(v) == doctest::Approx(0.1 * (1 << 20)).epsilon(1e-14));
  }

  TEST_CASE("integrate handles smooth and endpoint-flat integrands") {
    CHECK(numerics::integrate([](double x) { return std::sin(x); }, 0.0, kPi) == doctest::Approx(2.0).epsilon(1e-12));
    const double v = numerics::integrate_2d([](double x, double y) { return x * y; }, 0.0, 1.0,
                                            [](double) { return 0.0; }, [](double x) { return x; });
    CHECK(v == doctest::Approx(1.0 / 8.0).epsilon(1e-12));
  }

  TEST_CASE("three_halves_tail matches brute force") {
    for (double lambda : {0.0, 1e-4, 1e-2, 0.5}) {
      for (double N : {1.0, 10.0, 1000.0}) {
        // brute force to 1e7 plus integral remainder
        double s = 0.0;
        const long top = 10'000'000;
        for (long n = top; n > static_cast<long>(N); --n) {
          const double x = static_cast<double>(n);
          s += std::exp(-lambda * x) / (x * std::sqrt(x));
        }
        if (lambda == 0.0) s += 2.0 / std::sqrt(static_cast<double>(top) + 0.5);
        CAPTURE(lambda);
        CAPTURE(N);
        CHECK(numerics::three_halves_tail(lambda, N) == doctest::Approx(s).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("kolmogorov quantiles") {
    CHECK(numerics::kolmogorov_quantile(0.05) == doctest::Approx(1.3581).epsilon(1e-4));
    CHECK(numerics::kolmogorov_quantile(0.01) == doctest::Approx(1.6276).epsilon(1e-4));
    CHECK(numerics::kolmogorov_sf(numerics::kolmogorov_quantile(0.2)) == doctest::Approx(0.2).epsilon(1e-10));
  }

  TEST_CASE("replica_reduce is independent of the worker count") {
    auto run = [] {
      return parallel::replica_reduce(99, 5000, numerics::MeanAccumulator{},
                                      [](Rng& rng, std::size_t, numerics::MeanAccumulator& a) {
                                        a.add(uniform_open(rng));
                                      });
    };
    parallel::set_workers(1);
    const auto a = run();
    parallel::set_workers(3);
    const auto b = run();
    parallel::set_workers(1);
    CHECK(a.sum == b.sum);
    CHECK(a.sum_sq == b.sum_sq);
    CHECK(a.mean() == doctest::Approx(0.5).epsilon(0.02));
  }
}
