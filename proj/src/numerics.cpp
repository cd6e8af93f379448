#include "mrlab/numerics.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "mrlab/error.hpp"

namespace mrlab::numerics {

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 16) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double MeanAccumulator::variance() const {
  if (count < 2) return 0.0;
  const double n = static_cast<double>(count);
  const double m = sum / n;
  return std::max(0.0, (sum_sq - n * m * m) / (n - 1.0));
}

double MeanAccumulator::std_error() const {
  return count < 2 ? 0.0 : std::sqrt(variance() / static_cast<double>(count));
}

void CellAccumulator::add(std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum[i] += values[i];
    sum_sq[i] += values[i] * values[i];
  }
  ++count;
}

void CellAccumulator::merge(const CellAccumulator& o) {
  for (std::size_t i = 0; i < sum.size(); ++i) {
    sum[i] += o.sum[i];
    sum_sq[i] += o.sum_sq[i];
  }
  count += o.count;
}

std::vector<double> CellAccumulator::means() const {
  std::vector<double> out(sum.size(), 0.0);
  if (count == 0) return out;
  for (std::size_t i = 0; i < sum.size(); ++i) out[i] = sum[i] / static_cast<double>(count);
  return out;
}

std::vector<double> CellAccumulator::std_errors() const {
  std::vector<double> out(sum.size(), 0.0);
  if (count < 2) return out;
  const double n = static_cast<double>(count);
  for (std::size_t i = 0; i < sum.size(); ++i) {
    const double m = sum[i] / n;
    const double var = std::max(0.0, (sum_sq[i] - n * m * m) / (n - 1.0));
    out[i] = std::sqrt(var / n);
  }
  return out;
}

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol,
                 unsigned max_depth) {
  if (a == b) return 0.0;
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, max_depth, rel_tol,
                                                                        &err);
}

double integrate_endpoint(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  if (a == b) return 0.0;
  thread_local boost::math::quadrature::tanh_sinh<double> rule;
  return rule.integrate([&f](double x) { return f(x); }, a, b, rel_tol);
}

double integrate_2d(const std::function<double(double, double)>& f, double ax, double bx,
                    const std::function<double(double)>& ay, const std::function<double(double)>& by,
                    double rel_tol) {
  auto inner = [&](double x) {
    return integrate([&](double y) { return f(x, y); }, ay(x), by(x), rel_tol);
  };
  return integrate(inner, ax, bx, rel_tol);
}

namespace {

// Upper incomplete gamma at s = -1/2 scaled: int_A^inf e^{-lambda y} y^{-3/2} dy.
double three_halves_integral(double lambda, double A) {
  if (lambda == 0.0) return 2.0 / std::sqrt(A);
  const double z = lambda * A;
  // Gamma(-1/2, z) = 2 (z^{-1/2} e^{-z} - sqrt(pi) erfc(sqrt z))
  const double g = 2.0 * (std::exp(-z) / std::sqrt(z) - std::sqrt(kPi) * std::erfc(std::sqrt(z)));
  return std::sqrt(lambda) * g;
}

}  // namespace

double three_halves_tail(double lambda, double N) {
  if (lambda < 0.0 || N < 1.0) throw InvalidArgument("three_halves_tail: need lambda >= 0, N >= 1");
  // Sum the first terms explicitly so the Euler-Maclaurin remainder is negligible.
  double direct = 0.0;
  double n = N + 1.0;
  for (int i = 0; i < 32; ++i, n += 1.0) direct += std::exp(-lambda * n) * std::pow(n, -1.5);
  const double A = n;
  const double g = std::exp(-lambda * A) * std::pow(A, -1.5);
  const double dg = g * (-lambda - 1.5 / A);
  const double d3g = g * (-std::pow(lambda, 3) - 4.5 * lambda * lambda / A - 3.0 * 3.75 * lambda / (A * A) -
                          1.5 * 2.5 * 3.5 / (A * A * A));
  return direct + three_halves_integral(lambda, A) + 0.5 * g - dg / 12.0 + d3g / 720.0;
}

double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

double kolmogorov_quantile(double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("kolmogorov_quantile: level must be in (0,1)");
  double lo = 0.2, hi = 5.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (kolmogorov_sf(mid) > level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace mrlab::numerics
