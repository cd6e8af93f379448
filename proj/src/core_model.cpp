#include "mrlab/core_model.hpp"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <limits>

#include "mrlab/error.hpp"
#include "mrlab/numerics.hpp"

namespace mrlab {

using numerics::kPi;

StateGrid::StateGrid(double b, std::size_t G) : b_(b) {
  if (!(b > 0.0)) throw InvalidArgument("StateGrid: interval length must be positive");
  if (G < 2) throw InvalidArgument("StateGrid: need at least 2 nodes");
  const double h = b / static_cast<double>(G - 1);
  nodes_.resize(G);
  weights_.assign(G, h);
  for (std::size_t i = 0; i < G; ++i) nodes_[i] = h * static_cast<double>(i);
  nodes_.back() = b;
  weights_.front() = weights_.back() = 0.5 * h;
}

std::size_t StateGrid::cell_of(std::size_t i, std::size_t cells) const {
  const auto c = static_cast<std::size_t>(nodes_[i] / b_ * static_cast<double>(cells));
  return std::min(c, cells - 1);
}

std::size_t StateGrid::nearest(double x) const {
  const double pos = std::clamp(x / spacing(), 0.0, static_cast<double>(size() - 1));
  return static_cast<std::size_t>(std::lround(pos));
}

TailIndex::TailIndex(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("tail index alpha must lie in (0,1)");
}

double SlowlyVarying::operator()(double n) const {
  if (kind == Kind::Constant) return c;
  return c * std::pow(1.0 + std::log(n), p);
}

double SlowlyVarying::derivative(double n) const {
  if (kind == Kind::Constant) return 0.0;
  return c * p * std::pow(1.0 + std::log(n), p - 1.0) / n;
}

void SlowlyVarying::validate() const {
  if (!(c > 0.0)) throw InvalidArgument("slowly varying scale c must be positive");
  if (!std::isfinite(p)) throw InvalidArgument("slowly varying exponent p must be finite");
}

const char* to_string(FamilyKind f) { return f == FamilyKind::Separable ? "separable" : "modulated"; }

nlohmann::json KernelSpec::to_json() const {
  nlohmann::json l = {{"kind", L.kind == SlowlyVarying::Kind::Constant ? "constant" : "log_power"},
                      {"c", L.c},
                      {"p", L.p}};
  return {{"family", to_string(family)}, {"alpha", alpha}, {"L", l},  {"eps", eps},
          {"G", G},                      {"b", b},         {"n_table", n_table}};
}

KernelSpec KernelSpec::from_json(const nlohmann::json& j) {
  static const std::vector<std::string> allowed = {"family", "alpha", "L", "eps", "G", "b", "n_table"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw InvalidArgument("kernel: unknown key '" + key + "'");
  }
  KernelSpec s;
  if (j.contains("family")) {
    const auto f = j.at("family").get<std::string>();
    if (f == "separable") s.family = FamilyKind::Separable;
    else if (f == "modulated") s.family = FamilyKind::Modulated;
    else throw InvalidArgument("kernel.family: expected separable|modulated, got '" + f + "'");
  }
  s.alpha = j.value("alpha", s.alpha);
  s.eps = j.value("eps", s.eps);
  s.G = j.value("G", s.G);
  s.b = j.value("b", s.b);
  s.n_table = j.value("n_table", s.n_table);
  if (j.contains("L")) {
    const auto& l = j.at("L");
    for (const auto& [key, _] : l.items()) {
      if (key != "kind" && key != "c" && key != "p") throw InvalidArgument("kernel.L: unknown key '" + key + "'");
    }
    const auto kind = l.value("kind", std::string("constant"));
    if (kind == "constant") s.L = SlowlyVarying::constant(l.value("c", 1.0));
    else if (kind == "log_power") s.L = SlowlyVarying::log_power(l.value("c", 1.0), l.value("p", 0.0));
    else throw InvalidArgument("kernel.L.kind: expected constant|log_power, got '" + kind + "'");
  }
  return s;
}

HeavyTailKernel::HeavyTailKernel(const KernelSpec& spec)
    : spec_(spec), grid_(spec.b, spec.G), alpha_(spec.alpha) {
  if (!(std::abs(spec.eps) < 1.0)) throw InvalidArgument("modulation amplitude |eps| must be < 1");
  if (spec.n_table < 64) throw InvalidArgument("n_table must be at least 64");
  spec.L.validate();

  const std::size_t G = size();
  const double b = grid_.length();
  k_.resize(G * G);
  row_cdf_.resize(G * G);
  for (std::size_t x = 0; x < G; ++x) {
    double row = 0.0;
    for (std::size_t y = 0; y < G; ++y) {
      const double v = (1.0 + spec.eps * std::cos(2.0 * kPi * (grid_.node(x) + grid_.node(y)) / b)) / b;
      k_[x * G + y] = v;
      row += grid_.weight(y) * v;
    }
    double acc = 0.0;
    for (std::size_t y = 0; y < G; ++y) {
      k_[x * G + y] /= row;
      acc += grid_.weight(y) * k_[x * G + y];
      row_cdf_[x * G + y] = acc;
    }
    for (std::size_t y = 0; y < G; ++y) row_cdf_[x * G + y] /= acc;
  }

  // Common interarrival law, tabulated to n_table and continued analytically.
  const double a = alpha();
  const auto n_tab = static_cast<std::size_t>(spec.n_table);
  cdf_.resize(n_tab);
  double sum = 0.0, comp = 0.0;  // Kahan
  for (std::size_t n = 1; n <= n_tab; ++n) {
    const double nd = static_cast<double>(n);
    const double term = spec.L(nd) * std::pow(nd, -1.0 - a) - comp;
    const double t = sum + term;
    comp = (t - sum) - term;
    sum = t;
    cdf_[n - 1] = sum;
  }
  const double total = sum + unnormalized_tail(static_cast<double>(spec.n_table));
  tail_const_ = 1.0 / total;
  for (double& c : cdf_) c *= tail_const_;

  double mass = 0.0, first = 0.0;
  for (int n = 1; n <= kHeadLength; ++n) {
    mass += base_pmf(n);
    first += n * base_pmf(n);
  }
  head_mean_ = first / mass;
  head_scale_ = 0.5 / std::max(head_mean_ - 1.0, kHeadLength - head_mean_);
}

double HeavyTailKernel::unnormalized_tail(double m) const {
  const double a = alpha();
  const auto& L = spec_.L;
  auto g = [&](double y) { return L(y) * std::pow(y, -1.0 - a); };
  double A = std::floor(m) + 1.0;
  double direct = 0.0;
  for (; A < 1.0e4; A += 1.0) direct += g(A);
  double integral;
  if (L.kind == SlowlyVarying::Kind::Constant) {
    integral = L.c * std::pow(A, -a) / a;
  } else {
    boost::math::quadrature::exp_sinh<double> integrator;
    const double s0 = 1.0 + std::log(A);
    const double p = L.p;
    // s = 1 + log y turns the tail integral into exp(a (1 - s0)) int_0^inf (s0+t)^p e^{-a t} dt.
    integral = L.c * std::exp(a * (1.0 - s0)) *
               integrator.integrate([&](double t) { return std::pow(s0 + t, p) * std::exp(-a * t); }, 0.0,
                                    std::numeric_limits<double>::infinity());
  }
  const double gp = L.derivative(A) * std::pow(A, -1.0 - a) - (1.0 + a) * g(A) / A;
  return direct + integral + 0.5 * g(A) - gp / 12.0;
}

double HeavyTailKernel::base_pmf(std::int64_t n) const {
  if (n < 1) return 0.0;
  const double nd = static_cast<double>(n);
  return tail_const_ * spec_.L(nd) * std::pow(nd, -1.0 - alpha());
}

double HeavyTailKernel::base_tail(std::int64_t n) const {
  if (n < 1) return 1.0;
  if (n < spec_.n_table) return 1.0 - cdf_[static_cast<std::size_t>(n - 1)];
  return tail_const_ * unnormalized_tail(static_cast<double>(n));
}

double HeavyTailKernel::head_factor(std::size_t x, std::size_t y, int n) const {
  if (spec_.family == FamilyKind::Separable) return 1.0;
  const double theta = head_scale_ * std::sin(2.0 * kPi * (grid_.node(x) - grid_.node(y)) / grid_.length());
  return 1.0 + theta * (n - head_mean_);
}

double HeavyTailKernel::pmf(std::size_t x, std::size_t y, std::int64_t n) const {
  if (n < 1) return 0.0;
  if (n <= kHeadLength) return base_pmf(n) * head_factor(x, y, static_cast<int>(n));
  return base_pmf(n);
}

std::size_t HeavyTailKernel::sample_next_state(std::size_t x, Rng& rng) const {
  const double u = uniform_open(rng);
  const auto row = row_cdf_.begin() + static_cast<std::ptrdiff_t>(x * size());
  const auto it = std::upper_bound(row, row + static_cast<std::ptrdiff_t>(size()), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - row), size() - 1);
}

std::int64_t HeavyTailKernel::sample_interarrival(std::size_t x, std::size_t y, Rng& rng) const {
  const double u = uniform_open(rng);
  const double head_mass = cdf_[kHeadLength - 1];
  if (u < head_mass) {
    double acc = 0.0;
    for (int n = 1; n < kHeadLength; ++n) {
      acc += pmf(x, y, n);
      if (u < acc) return n;
    }
    return kHeadLength;
  }
  if (u < cdf_.back()) {
    const auto it = std::upper_bound(cdf_.begin() + kHeadLength, cdf_.end(), u);
    return static_cast<std::int64_t>(it - cdf_.begin()) + 1;
  }
  // Conditionally on landing in the tail, draw a fresh uniform for full precision.
  return invert_tail(uniform_open(rng) * base_tail(spec_.n_table));
}

std::int64_t HeavyTailKernel::invert_tail(double r) const {
  // Smallest n > n_table with P(N > n) < r.
  std::int64_t lo = spec_.n_table;
  std::int64_t hi = lo;
  do {
    lo = hi;
    if (hi >= kInterarrivalCap / 2) return kInterarrivalCap;
    hi *= 2;
  } while (base_tail(hi) >= r);
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (base_tail(mid) < r ? hi : lo) = mid;
  }
  return hi;
}

StationaryMeasure stationary_distribution(const HeavyTailKernel& kernel, double tol, int max_iter) {
  const auto& grid = kernel.grid();
  const std::size_t G = grid.size();
  std::vector<double> pi(G, 1.0 / grid.length()), next(G);
  double residual = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t x = 0; x < G; ++x) {
      const double wx = grid.weight(x) * pi[x];
      for (std::size_t y = 0; y < G; ++y) next[y] += wx * kernel.k(x, y);
    }
    double mass = 0.0;
    for (std::size_t y = 0; y < G; ++y) mass += grid.weight(y) * next[y];
    residual = 0.0;
    for (std::size_t y = 0; y < G; ++y) {
      next[y] /= mass;
      residual = std::max(residual, std::abs(next[y] - pi[y]));
    }
    pi.swap(next);
    if (residual < tol) {
      double total = 0.0;
      for (std::size_t y = 0; y < G; ++y) total += grid.weight(y) * pi[y];
      return {std::move(pi), total, residual, it};
    }
  }
  throw ConvergenceError("stationary_distribution: no convergence, residual " + std::to_string(residual));
}

double pi2_expectation(const HeavyTailKernel& kernel, const StationaryMeasure& pi) {
  const auto& grid = kernel.grid();
  if (pi.density.size() != grid.size()) throw InvalidArgument("pi2_expectation: grid mismatch");
  double s = 0.0;
  for (std::size_t u = 0; u < grid.size(); ++u) {
    double row = 0.0;
    for (std::size_t v = 0; v < grid.size(); ++v) row += kernel.phi(u, v) * grid.weight(v);
    s += grid.weight(u) * pi.density[u] * row;
  }
  return s;
}

std::vector<double> cell_masses(const StateGrid& grid, const StationaryMeasure& pi, std::size_t cells) {
  std::vector<double> out(cells, 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) out[grid.cell_of(i, cells)] += grid.weight(i) * pi.density[i];
  return out;
}

}  // namespace mrlab
