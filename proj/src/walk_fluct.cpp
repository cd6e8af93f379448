#include "mrlab/walk_fluct.hpp"

#include <algorithm>
#include <cmath>
#include <boost/random/normal_distribution.hpp>
#include <random>

#include "mrlab/error.hpp"
#include "mrlab/numerics.hpp"
#include "mrlab/parallel.hpp"

namespace mrlab {

using numerics::kPi;

namespace {

const double kSqrt2 = std::sqrt(2.0);
const double kSqrt3 = std::sqrt(3.0);

void check_keys(const nlohmann::json& j, const std::vector<std::string>& allowed, const char* what) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw InvalidArgument(std::string(what) + ": unknown key '" + key + "'");
  }
}

// P[lo < X <= hi] without cancellation in the upper tail.
double interval_mass(const WalkModel& m, double lo, double hi) {
  if (lo >= 0.0) return m.cdf(-lo) - m.cdf(-hi);
  return m.cdf(hi) - m.cdf(lo);
}

// One half of a ladder pair: first k with sign * S_k > 0.
double ladder_half(const WalkModel& model, double sign, std::int64_t cap, Rng& rng, std::int64_t& epoch,
                   int& restarts) {
  for (;;) {
    double s = 0.0;
    for (std::int64_t k = 1; k <= cap; ++k) {
      s += model.sample(rng);
      if (sign * s > 0.0) {
        epoch = k;
        return sign * s;
      }
    }
    ++restarts;
  }
}

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - xs.begin());
  const double t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
  return ys[k - 1] + t * (ys[k] - ys[k - 1]);
}

double linear_integral(const std::vector<double>& xs, const std::vector<double>& ys, double lo, double hi) {
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const double l = std::max(lo, xs[k]);
    const double r = std::min(hi, xs[k + 1]);
    if (r <= l) continue;
    s += 0.5 * (r - l) * (interpolate(xs, ys, l) + interpolate(xs, ys, r));
  }
  return s;
}

struct CountAcc {
  std::vector<double> counts;
  void merge(const CountAcc& o) {
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
  }
};

double binomial_se(double p, double n) { return std::sqrt(std::max(0.0, p * (1.0 - p)) / n); }

}  // namespace

const char* to_string(WalkModel::Kind k) {
  switch (k) {
    case WalkModel::Kind::Gaussian: return "gaussian";
    case WalkModel::Kind::Uniform: return "uniform";
    case WalkModel::Kind::Laplace: return "laplace";
  }
  return "unknown";
}

double WalkModel::pdf(double z) const {
  switch (kind) {
    case Kind::Gaussian: return std::exp(-0.5 * z * z / (sigma * sigma)) / (sigma * std::sqrt(2.0 * kPi));
    case Kind::Uniform: {
      const double b = sigma * kSqrt3;
      return std::abs(z) <= b ? 0.5 / b : 0.0;
    }
    case Kind::Laplace: {
      const double s = sigma / kSqrt2;
      return 0.5 / s * std::exp(-std::abs(z) / s);
    }
  }
  return 0.0;
}

double WalkModel::cdf(double z) const {
  switch (kind) {
    case Kind::Gaussian: return 0.5 * std::erfc(-z / (sigma * kSqrt2));
    case Kind::Uniform: {
      const double b = sigma * kSqrt3;
      return std::clamp((z + b) / (2.0 * b), 0.0, 1.0);
    }
    case Kind::Laplace: {
      const double s = sigma / kSqrt2;
      return z < 0.0 ? 0.5 * std::exp(z / s) : 1.0 - 0.5 * std::exp(-z / s);
    }
  }
  return 0.0;
}

double WalkModel::sample(Rng& rng) const {
  switch (kind) {
    case Kind::Gaussian: {
      boost::random::normal_distribution<double> normal(0.0, sigma);
      return normal(rng);
    }
    case Kind::Uniform: return sigma * kSqrt3 * (2.0 * uniform_open(rng) - 1.0);
    case Kind::Laplace: {
      const double u = uniform_open(rng);
      const double e = -std::log(uniform_open(rng));
      return (u < 0.5 ? -1.0 : 1.0) * e * sigma / kSqrt2;
    }
  }
  return 0.0;
}

double WalkModel::support_radius() const {
  switch (kind) {
    case Kind::Gaussian: return 8.6 * sigma;
    case Kind::Uniform: return sigma * kSqrt3;
    case Kind::Laplace: return sigma / kSqrt2 * std::log(0.5e17);
  }
  return 0.0;
}

void WalkModel::validate() const {
  if (!(sigma > 0.0 && std::isfinite(sigma))) throw InvalidArgument("walk: sigma must be positive");
  if (!(a > 0.0 && std::isfinite(a))) throw InvalidArgument("walk: a must be positive");
  const double up = 1.0 - cdf(a);
  const double down = cdf(-a);
  if (!(up > 0.0 && up < 1.0 && down > 0.0 && down < 1.0))
    throw InvalidArgument("walk: need P[S_1 > a] and P[-S_1 > a] in (0,1)");
}

nlohmann::json WalkModel::to_json() const { return {{"kind", to_string(kind)}, {"sigma", sigma}, {"a", a}}; }

WalkModel WalkModel::from_json(const nlohmann::json& j) {
  check_keys(j, {"kind", "sigma", "a"}, "walk");
  WalkModel m;
  const auto k = j.value("kind", std::string("gaussian"));
  if (k == "gaussian") m.kind = Kind::Gaussian;
  else if (k == "uniform") m.kind = Kind::Uniform;
  else if (k == "laplace") m.kind = Kind::Laplace;
  else throw InvalidArgument("walk.kind: expected gaussian|uniform|laplace, got '" + k + "'");
  m.sigma = j.value("sigma", m.sigma);
  m.a = j.value("a", m.a);
  m.validate();
  return m;
}

LadderSample sample_ladder(const WalkModel& model, std::int64_t cap, Rng& rng) {
  if (cap < 1'000'000) throw InvalidArgument("sample_ladder: cap must be at least 1e6");
  LadderSample s;
  s.H1 = ladder_half(model, 1.0, cap, rng, s.T1, s.restarts);
  s.H1m = ladder_half(model, -1.0, cap, rng, s.T1m, s.restarts);
  return s;
}

double LadderTailTable::cap_rate() const {
  return replicas ? static_cast<double>(cap_events) / (2.0 * static_cast<double>(replicas)) : 0.0;
}

double LadderTailTable::tail_ascending(double r) const {
  const auto it = std::lower_bound(ascending.begin(), ascending.end(), r);
  return static_cast<double>(ascending.end() - it) / static_cast<double>(ascending.size());
}

double LadderTailTable::tail_descending(double r) const {
  const auto it = std::lower_bound(descending.begin(), descending.end(), r);
  return static_cast<double>(descending.end() - it) / static_cast<double>(descending.size());
}

double LadderTailTable::se_ascending(double r) const {
  return binomial_se(tail_ascending(r), static_cast<double>(ascending.size()));
}

double LadderTailTable::se_descending(double r) const {
  return binomial_se(tail_descending(r), static_cast<double>(descending.size()));
}

double LadderTailTable::mean_ascending() const {
  return numerics::pairwise_sum(ascending) / static_cast<double>(ascending.size());
}

double LadderTailTable::mean_ascending_se() const {
  numerics::MeanAccumulator acc;
  for (double h : ascending) acc.add(h);
  return acc.std_error();
}

LadderTailTable ladder_tail_table(const WalkModel& model, std::size_t replicas, std::uint64_t seed,
                                  std::int64_t cap) {
  model.validate();
  if (replicas < 2) throw InvalidArgument("ladder_tail_table: need at least 2 replicas");
  struct Acc {
    std::vector<double> up, down;
    double restarts = 0.0, epochs = 0.0;
    void merge(const Acc& o) {
      up.insert(up.end(), o.up.begin(), o.up.end());
      down.insert(down.end(), o.down.begin(), o.down.end());
      restarts += o.restarts;
      epochs += o.epochs;
    }
  };
  Acc acc = parallel::replica_reduce(seed, replicas, Acc{}, [&](Rng& rng, std::size_t, Acc& a) {
    const LadderSample s = sample_ladder(model, cap, rng);
    a.up.push_back(s.H1);
    a.down.push_back(s.H1m);
    a.restarts += s.restarts;
    a.epochs += static_cast<double>(s.T1 + s.T1m);
  });
  LadderTailTable t;
  t.ascending = std::move(acc.up);
  t.descending = std::move(acc.down);
  std::sort(t.ascending.begin(), t.ascending.end());
  std::sort(t.descending.begin(), t.descending.end());
  t.replicas = replicas;
  t.cap_events = static_cast<std::size_t>(acc.restarts);
  t.cap = cap;
  t.mean_T_capped = acc.epochs / (2.0 * static_cast<double>(replicas));
  return t;
}

std::vector<LadderTailRow> ladder_tail_probs(const LadderTailTable& table, std::span<const double> points) {
  std::vector<LadderTailRow> rows;
  for (double r : points) {
    if (r < 0.0) throw InvalidArgument("ladder_tail_probs: points must be >= 0");
    rows.push_back({r, table.tail_ascending(r), table.se_ascending(r), table.tail_descending(r),
                    table.se_descending(r)});
  }
  return rows;
}

double phi_a(const WalkModel& model, const LadderTailTable& table, double x, double y) {
  return table.tail_descending(model.a - y) * table.tail_ascending(model.a - x) /
         (model.sigma * std::sqrt(2.0 * kPi));
}

RenewalFunctionEstimate renewal_function_estimate(const WalkModel& model, std::vector<double> x_grid,
                                                  std::size_t replicas, std::int64_t horizon,
                                                  std::uint64_t seed, std::int64_t cap) {
  model.validate();
  if (x_grid.empty()) throw InvalidArgument("renewal_function_estimate: empty grid");
  if (horizon < 1) throw InvalidArgument("renewal_function_estimate: horizon must be >= 1");
  std::sort(x_grid.begin(), x_grid.end());
  if (x_grid.front() < 0.0) throw InvalidArgument("renewal_function_estimate: grid must be >= 0");
  const std::size_t nx = x_grid.size();
  const double x_max = x_grid.back();

  for (;;) {
    struct Acc {
      numerics::CellAccumulator cells;
      double truncated = 0.0;
      void merge(const Acc& o) {
        cells.merge(o.cells);
        truncated += o.truncated;
      }
    };
    Acc zero{numerics::CellAccumulator(2 * nx), 0.0};
    Acc acc = parallel::replica_reduce(seed, replicas, zero, [&](Rng& rng, std::size_t, Acc& a) {
      std::vector<double> counts(2 * nx, 0.0);
      bool truncated = false;
      for (int side = 0; side < 2; ++side) {
        const double sign = side == 0 ? 1.0 : -1.0;
        double level = 0.0;
        std::int64_t k = 0;
        int restarts = 0;
        std::int64_t epoch = 0;
        while (level <= x_max) {
          const auto first = std::lower_bound(x_grid.begin(), x_grid.end(), level);
          for (auto it = first; it != x_grid.end(); ++it) counts[side * nx + (it - x_grid.begin())] += 1.0;
          if (++k > horizon) {
            truncated = true;
            break;
          }
          level += ladder_half(model, sign, cap, rng, epoch, restarts);
        }
      }
      a.cells.add(counts);
      if (truncated) a.truncated += 1.0;
    });
    const double frac = acc.truncated / static_cast<double>(replicas);
    if (frac > 1e-3 && horizon < (std::int64_t{1} << 20)) {
      horizon *= 2;
      continue;
    }
    RenewalFunctionEstimate r;
    const auto mean = acc.cells.means();
    const auto se = acc.cells.std_errors();
    r.x_grid = x_grid;
    r.U_values.assign(mean.begin(), mean.begin() + nx);
    r.U_se.assign(se.begin(), se.begin() + nx);
    r.V_values.assign(mean.begin() + nx, mean.end());
    r.V_se.assign(se.begin() + nx, se.end());
    r.replicas = replicas;
    r.truncated_fraction = frac;
    return r;
  }
}

nlohmann::json ConstrainedKernelOptions::to_json() const {
  return {{"G", G},
          {"n_max", n_max},
          {"M", M},
          {"halfline_cells", halfline_cells},
          {"ladder_replicas", ladder_replicas},
          {"ladder_cap", ladder_cap},
          {"seed", seed}};
}

ConstrainedKernelOptions ConstrainedKernelOptions::from_json(const nlohmann::json& j) {
  check_keys(j, {"G", "n_max", "M", "halfline_cells", "ladder_replicas", "ladder_cap", "seed"}, "kernel");
  ConstrainedKernelOptions o;
  o.G = j.value("G", o.G);
  o.n_max = j.value("n_max", o.n_max);
  o.M = j.value("M", o.M);
  o.halfline_cells = j.value("halfline_cells", o.halfline_cells);
  o.ladder_replicas = j.value("ladder_replicas", o.ladder_replicas);
  o.ladder_cap = j.value("ladder_cap", o.ladder_cap);
  o.seed = j.value("seed", o.seed);
  return o;
}

double strip_integral(const StateGrid& grid, std::span<const double> values, double lo, double hi) {
  const std::vector<double> ys(values.begin(), values.end());
  return linear_integral(grid.nodes(), ys, lo, hi);
}

double ConstrainedKernelTensor::strip_mass(std::int64_t n, std::size_t x) const {
  const std::size_t g = G();
  const double* row = &f[(static_cast<std::size_t>(n - 1) * g + x) * g];
  double s = 0.0;
  for (std::size_t y = 0; y < g; ++y) s += grid.weight(y) * row[y];
  return s;
}

double ConstrainedKernelTensor::max_balance_error() const {
  double e = 0.0;
  for (double b : mass_balance) e = std::max(e, std::abs(b - 1.0));
  return e;
}

ConstrainedKernelTensor constrained_kernel(const WalkModel& model, const ConstrainedKernelOptions& opt) {
  const LadderTailTable ladders = ladder_tail_table(model, opt.ladder_replicas, opt.seed, opt.ladder_cap);
  return constrained_kernel(model, opt, ladders);
}

ConstrainedKernelTensor constrained_kernel(const WalkModel& model, const ConstrainedKernelOptions& opt,
                                           const LadderTailTable& ladders) {
  model.validate();
  if (opt.G < 2) throw InvalidArgument("constrained_kernel: G must be >= 2");
  if (opt.n_max < 2) throw InvalidArgument("constrained_kernel: n_max must be >= 2");
  const double a = model.a;
  const double sigma = model.sigma;
  const double root = std::sqrt(static_cast<double>(opt.n_max));
  const double M = opt.M > 0.0 ? opt.M : a + 7.0 * sigma * root;
  if (!(M > a + 6.0 * sigma * root)) throw InvalidArgument("constrained_kernel: need M > a + 6 sigma sqrt(n_max)");
  std::size_t K = opt.halfline_cells;
  if (K == 0) K = std::max<std::size_t>(4 * opt.G, static_cast<std::size_t>(std::ceil((M - a) / (sigma / 8.0))));
  if (K < 4 * opt.G) throw InvalidArgument("constrained_kernel: halfline_cells must be >= 4 G");

  ConstrainedKernelTensor t;
  t.model = model;
  t.grid = StateGrid(a, opt.G);
  t.n_max = opt.n_max;
  t.M = M;
  t.halfline_cells = K;
  const std::size_t G = opt.G;
  const auto n_max = static_cast<std::size_t>(opt.n_max);
  const double dx = (M - a) / static_cast<double>(K);
  const double R = model.support_radius();
  const auto D = static_cast<std::size_t>(std::ceil(R / dx)) + 1;
  const auto mid = [&](std::size_t i) { return a + (static_cast<double>(i) + 0.5) * dx; };

  std::vector<double> taps(2 * D + 1);
  for (std::size_t k = 0; k <= 2 * D; ++k) {
    const double d = static_cast<double>(k) - static_cast<double>(D);
    taps[k] = interval_mass(model, (d - 0.5) * dx, (d + 0.5) * dx);
  }
  const std::size_t I_strip = std::min(K, static_cast<std::size_t>(std::ceil((R + a) / dx)) + 1);
  const std::size_t I_below = std::min(K, D + 1);
  std::vector<double> to_strip(I_strip * G), strip_exact(I_strip), below(I_below);
  for (std::size_t i = 0; i < I_strip; ++i) {
    for (std::size_t y = 0; y < G; ++y) to_strip[i * G + y] = model.pdf(t.grid.node(y) - mid(i));
    strip_exact[i] = interval_mass(model, -mid(i), a - mid(i));
  }
  for (std::size_t i = 0; i < I_below; ++i) below[i] = model.cdf(-mid(i));

  t.f.assign(n_max * G * G, 0.0);
  t.survival.assign((n_max + 1) * G, 0.0);
  std::vector<double> below_total(G, 0.0);
  t.truncation.assign(G, 0.0);

  parallel::for_each_index(G, [&](std::size_t xi) {
    const double x = t.grid.node(xi);
    std::vector<double> cur(K, 0.0), next(K, 0.0);
    std::size_t hi = std::min(K, D + 1);
    for (std::size_t i = 0; i < hi; ++i) {
      const double lo_edge = a + static_cast<double>(i) * dx - x;
      cur[i] = interval_mass(model, lo_edge, lo_edge + dx);
    }
    for (std::size_t y = 0; y < G; ++y) t.f[xi * G + y] = model.pdf(t.grid.node(y) - x);
    t.survival[xi] = 1.0;
    double alive = 0.0;
    for (std::size_t i = 0; i < hi; ++i) alive += cur[i];
    t.survival[G + xi] = alive;
    double below0 = model.cdf(-x);
    double lost = model.cdf(x - M);

    for (std::size_t n = 2; n <= n_max; ++n) {
      double* fr = &t.f[((n - 1) * G + xi) * G];
      double into_strip = 0.0, into_below = 0.0;
      for (std::size_t i = 0; i < std::min(hi, I_strip); ++i) {
        const double w = cur[i];
        const double* row = &to_strip[i * G];
        for (std::size_t y = 0; y < G; ++y) fr[y] += w * row[y];
        into_strip += w * strip_exact[i];
      }
      for (std::size_t i = 0; i < std::min(hi, I_below); ++i) into_below += cur[i] * below[i];

      const double clt = (7.0 * sigma * std::sqrt(static_cast<double>(n)) + R) / dx;
      const std::size_t new_hi = std::min({K, hi + D, static_cast<std::size_t>(clt) + 1});
      std::fill(next.begin(), next.begin() + static_cast<std::ptrdiff_t>(new_hi), 0.0);
      for (std::size_t k = 0; k <= 2 * D; ++k) {
        const double c = taps[k];
        // next[j] += c cur[j - d] with d = k - D
        const std::ptrdiff_t d = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(D);
        const std::ptrdiff_t j0 = std::max<std::ptrdiff_t>(0, d);
        const std::ptrdiff_t j1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(new_hi),
                                                           static_cast<std::ptrdiff_t>(hi) + d);
        double* __restrict out = next.data();
        const double* __restrict in = cur.data() - d;
        for (std::ptrdiff_t j = j0; j < j1; ++j) out[j] += c * in[j];
      }
      double now = 0.0;
      for (std::size_t j = 0; j < new_hi; ++j) now += next[j];
      below0 += into_below;
      lost += std::max(0.0, alive - now - into_strip - into_below);
      alive = now;
      t.survival[n * G + xi] = alive;
      std::swap(cur, next);
      hi = new_hi;
    }
    below_total[xi] = below0;
    t.truncation[xi] = lost;
  });

  t.phi.assign(G * G, 0.0);
  for (std::size_t x = 0; x < G; ++x)
    for (std::size_t y = 0; y < G; ++y) t.phi[x * G + y] = phi_a(model, ladders, t.grid.node(x), t.grid.node(y));

  const double tail_sum = numerics::three_halves_tail(0.0, static_cast<double>(opt.n_max));
  t.strip_tail.assign(G, 0.0);
  t.defect.assign(G, 0.0);
  t.mass_balance.assign(G, 0.0);
  t.fbar.assign((n_max + 1) * G, 0.0);
  for (std::size_t x = 0; x < G; ++x) {
    double phi_int = 0.0;
    for (std::size_t y = 0; y < G; ++y) phi_int += t.grid.weight(y) * t.phi[x * G + y];
    t.strip_tail[x] = tail_sum * phi_int;
    t.defect[x] = below_total[x] + std::max(0.0, t.survival_at(opt.n_max, x) - t.strip_tail[x]);
    double acc = t.strip_tail[x];
    t.fbar[n_max * G + x] = acc;
    for (std::size_t n = n_max; n >= 1; --n) {
      acc += t.strip_mass(static_cast<std::int64_t>(n), x);
      t.fbar[(n - 1) * G + x] = acc;
    }
    t.mass_balance[x] = t.fbar[x] + t.defect[x];
  }
  for (std::size_t x = 0; x < G; ++x) {
    if (t.truncation[x] > 1e-2)
      throw DiscretizationError("constrained_kernel: mass lost beyond the half-line cutoff; increase M");
    if (std::abs(t.mass_balance[x] - 1.0) > 1e-2)
      throw DiscretizationError("constrained_kernel: mass balance off by more than 1e-2; increase halfline_cells or G");
  }
  return t;
}

ConstrainedKernelMc constrained_kernel_mc(const WalkModel& model, double x, std::int64_t n, std::size_t bins,
                                          std::size_t replicas, std::uint64_t seed) {
  model.validate();
  if (n < 1 || n > 16) throw InvalidArgument("constrained_kernel_mc: need 1 <= n <= 16");
  if (bins < 1 || replicas < 2) throw InvalidArgument("constrained_kernel_mc: need bins >= 1, replicas >= 2");
  const double a = model.a;
  CountAcc acc = parallel::replica_reduce(seed, replicas, CountAcc{std::vector<double>(bins, 0.0)},
                                          [&](Rng& rng, std::size_t, CountAcc& c) {
                                            double s = x;
                                            for (std::int64_t k = 1; k < n; ++k) {
                                              s += model.sample(rng);
                                              if (s <= a) return;
                                            }
                                            s += model.sample(rng);
                                            if (s < 0.0 || s > a) return;
                                            const auto b = std::min(bins - 1, static_cast<std::size_t>(s / a * bins));
                                            c.counts[b] += 1.0;
                                          });
  ConstrainedKernelMc r;
  r.n = n;
  r.replicas = replicas;
  const double N = static_cast<double>(replicas);
  double total = 0.0;
  for (double c : acc.counts) {
    total += c;
    r.bin_mass.push_back(c / N);
    r.bin_se.push_back(binomial_se(c / N, N));
  }
  r.acceptance = total / N;
  r.acceptance_se = binomial_se(r.acceptance, N);
  return r;
}

ThmPrReport thm_pr_check(const ConstrainedKernelTensor& tensor, const std::vector<std::int64_t>& n_list) {
  ThmPrReport rep;
  const std::size_t G = tensor.G();
  for (std::int64_t n : n_list) {
    if (n < 2 || n > tensor.n_max) throw InvalidArgument("thm_pr_check: n must lie in [2, n_max]");
    const double scale = std::pow(static_cast<double>(n), 1.5);
    double e = 0.0;
    for (std::size_t x = 0; x < G; ++x) {
      for (std::size_t y = 0; y < G; ++y) {
        const double p = tensor.phi_at(x, y);
        if (!(p > 0.0)) throw DiscretizationError("thm_pr_check: Phi_a vanishes on the grid");
        e = std::max(e, std::abs(scale * tensor.at(n, x, y) / p - 1.0));
      }
    }
    rep.rows.push_back({n, e});
  }
  rep.decreasing = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    if (rep.rows[i].n > rep.rows[i - 1].n && rep.rows[i].e >= rep.rows[i - 1].e) rep.decreasing = false;
  }
  return rep;
}

DoneyReport doney_local_check(const WalkModel& model, double x, double y, double delta, std::int64_t n,
                              std::size_t replicas, std::uint64_t seed, const RenewalFunctionEstimate& renewal) {
  model.validate();
  if (!(x > 0.0 && y > 0.0 && delta > 0.0) || n < 1) throw InvalidArgument("doney_local_check: need x, y, delta > 0");
  if (renewal.x_grid.back() < std::max(x, y + delta))
    throw InvalidArgument("doney_local_check: renewal grid does not cover [0, max(x, y + delta)]");
  const double lo = x - y - delta;
  const double hi = x - y;
  CountAcc acc = parallel::replica_reduce(seed, replicas, CountAcc{{0.0}}, [&](Rng& rng, std::size_t, CountAcc& c) {
    double s = 0.0;
    for (std::int64_t k = 0; k < n; ++k) {
      s += model.sample(rng);
      if (s >= x) return;
    }
    if (s > lo && s <= hi) c.counts[0] += 1.0;
  });
  DoneyReport r;
  const double N = static_cast<double>(replicas);
  r.estimate = acc.counts[0] / N;
  r.std_error = binomial_se(r.estimate, N);
  r.U_x = interpolate(renewal.x_grid, renewal.U_values, x);
  r.V_integral = linear_integral(renewal.x_grid, renewal.V_values, y, y + delta);
  r.predicted = r.U_x * r.V_integral / (model.sigma * std::sqrt(2.0 * kPi) * std::pow(static_cast<double>(n), 1.5));
  r.ratio = r.estimate / r.predicted;
  return r;
}

DualityReport duality_check(const WalkModel& model, std::int64_t m, double lo, double hi, std::size_t replicas,
                            std::uint64_t seed) {
  model.validate();
  if (m < 1 || !(hi > lo) || lo < 0.0) throw InvalidArgument("duality_check: need m >= 1 and 0 <= lo < hi");
  const auto in_interval = [&](double s) { return -s >= lo && -s < hi; };
  CountAcc meander = parallel::replica_reduce(seed, replicas, CountAcc{{0.0}}, [&](Rng& rng, std::size_t, CountAcc& c) {
    double s = 0.0;
    for (std::int64_t k = 0; k < m; ++k) {
      s += model.sample(rng);
      if (s > 0.0) return;
    }
    if (in_interval(s)) c.counts[0] += 1.0;
  });
  CountAcc ladder = parallel::replica_reduce(derive_seed(seed, 0x1adde5ULL), replicas, CountAcc{{0.0}},
                                             [&](Rng& rng, std::size_t, CountAcc& c) {
                                               double s = 0.0, low = 0.0;
                                               for (std::int64_t k = 1; k < m; ++k) {
                                                 s += model.sample(rng);
                                                 low = std::min(low, s);
                                               }
                                               s += model.sample(rng);
                                               if (s < low && in_interval(s)) c.counts[0] += 1.0;
                                             });
  DualityReport r;
  const double N = static_cast<double>(replicas);
  r.m = m;
  r.lo = lo;
  r.hi = hi;
  r.meander = meander.counts[0] / N;
  r.meander_se = binomial_se(r.meander, N);
  r.ladder = ladder.counts[0] / N;
  r.ladder_se = binomial_se(r.ladder, N);
  const double se = std::hypot(r.meander_se, r.ladder_se);
  r.z = se > 0.0 ? (r.meander - r.ladder) / se : 0.0;
  return r;
}

}  // namespace mrlab
