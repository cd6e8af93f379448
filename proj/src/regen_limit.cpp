#include "mrlab/regen_limit.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/special_functions/beta.hpp>

#include "mrlab/error.hpp"
#include "mrlab/numerics.hpp"
#include "mrlab/parallel.hpp"

namespace mrlab {

using numerics::kPi;

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
}

template <class Visit>
void walk_subordinator(double alpha, double step, Rng& rng, Visit&& visit) {
  const double scale = std::pow(step, 1.0 / alpha);
  double s = 0.0;
  for (;;) {
    s += scale * stable_increment(alpha, rng);
    if (s > 1.0) return;
    visit(s);
  }
}

double beta_draw(double a, double b, Rng& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

}  // namespace

double stable_increment(double alpha, Rng& rng) {
  check_alpha(alpha);
  if (alpha == 0.5) {
    std::normal_distribution<double> normal;
    double z = normal(rng);
    while (z == 0.0) z = normal(rng);
    return 1.0 / (2.0 * z * z);
  }
  const double u = kPi * uniform_open(rng);
  const double e = -std::log(uniform_open(rng));
  const double a = std::sin(alpha * u) / std::pow(std::sin(u), 1.0 / alpha);
  const double b = std::pow(std::sin((1.0 - alpha) * u) / e, (1.0 - alpha) / alpha);
  return a * b;
}

ClosedSetSample sample_regenerative_set(double alpha, double step, Rng& rng) {
  check_alpha(alpha);
  if (!(step > 0.0 && step <= 1e-2)) throw InvalidArgument("subordinator step must lie in (0, 1e-2]");
  ClosedSetSample out;
  out.source = ClosedSetSample::Source::Subordinator;
  out.points.push_back(0.0);
  walk_subordinator(alpha, step, rng, [&](double s) {
    if (s > out.points.back()) out.points.push_back(s);
  });
  return out;
}

MatheronValues matheron_functionals(const ClosedSetSample& set, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("t must lie in [0, 1]");
  MatheronValues v;
  const auto& p = set.points;
  auto above = std::upper_bound(p.begin(), p.end(), t);
  if (above != p.end()) v.d = *above;
  auto below = std::lower_bound(p.begin(), p.end(), t);
  if (below != p.begin()) v.g = *std::prev(below);
  return v;
}

LimitLawTable::LimitLawTable(double alpha) : alpha_(alpha) { check_alpha(alpha); }

double LimitLawTable::dt_density(double t, double y) const { return dt_density_gap(t, y - t); }

double LimitLawTable::dt_density_gap(double t, double gap) const {
  if (gap <= 0.0) return 0.0;
  return std::sin(alpha_ * kPi) / kPi * std::pow(t, alpha_) / ((t + gap) * std::pow(gap, alpha_));
}

double LimitLawTable::dt_cdf(double t, double y) const {
  if (!(t > 0.0)) throw InvalidArgument("t must be positive");
  if (y < t) throw InvalidArgument("dt_law_cdf needs y >= t");
  if (y == t) return 0.0;
  if (std::isinf(y)) return 1.0;
  if (alpha_ == 0.5) return 1.0 - 2.0 / kPi * std::atan(std::sqrt(t / (y - t)));
  return dt_cdf_quadrature(t, y);
}

double LimitLawTable::dt_cdf_quadrature(double t, double y) const {
  if (!(t > 0.0)) throw InvalidArgument("t must be positive");
  if (y < t) throw InvalidArgument("dt_law_cdf needs y >= t");
  if (y == t) return 0.0;
  if (std::isinf(y)) return 1.0;
  const double a = alpha_;
  const double c = std::sin(a * kPi) / kPi * std::pow(t, a);
  if (y <= 2.0 * t) {
    // u = t + w^{1/(1-a)}
    const double wmax = std::pow(y - t, 1.0 - a);
    auto f = [&](double w) {
      const double u = t + std::pow(w, 1.0 / (1.0 - a));
      return c / (u * (1.0 - a));
    };
    return numerics::integrate_endpoint(f, 0.0, wmax);
  }
  // tail: u = 1/z, z = q^{1/a}
  const double qmax = std::pow(y, -a);
  auto g = [&](double q) { return c / a * std::pow(1.0 - t * std::pow(q, 1.0 / a), -a); };
  return 1.0 - numerics::integrate_endpoint(g, 0.0, qmax);
}

double LimitLawTable::sample_dt(double t, Rng& rng) const {
  const double b = beta_draw(1.0 - alpha_, alpha_, rng);
  return t / (1.0 - b);
}

double LimitLawTable::g1_density(double u) const {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return std::sin(alpha_ * kPi) / kPi * std::pow(u, alpha_ - 1.0) * std::pow(1.0 - u, -alpha_);
}

double LimitLawTable::g1_density_complement(double v) const {
  if (v <= 0.0 || v >= 1.0) return 0.0;
  return std::sin(alpha_ * kPi) / kPi * std::pow(1.0 - v, alpha_ - 1.0) * std::pow(v, -alpha_);
}

double LimitLawTable::g1_cdf(double u) const {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  if (alpha_ == 0.5) return 0.5 + std::asin(2.0 * u - 1.0) / kPi;
  return boost::math::ibeta(alpha_, 1.0 - alpha_, u);
}

double LimitLawTable::gd_joint_density_half(double u, double v) {
  if (u <= 0.0 || v <= 0.0) return 0.0;
  return 1.0 / (2.0 * kPi * std::sqrt(u * v * v * v));
}

double dt_law_cdf(double alpha, double t, double y) { return LimitLawTable(alpha).dt_cdf(t, y); }

double clo_boundary(double s) {
  if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("s must lie in (0, 1)");
  return std::sqrt(s);
}

double clo_probability(double s, double t) {
  if (!(s > 0.0 && s < t && t < 1.0)) throw InvalidArgument("clo_probability needs 0 < s < t < 1");
  // u = w^2, v = 1 - r^2
  auto f = [](double w, double r) {
    const double d = 1.0 - r * r - w * w;
    return 4.0 * r * r / (d * std::sqrt(d));
  };
  const double rmax = std::sqrt(1.0 - t);
  const double inner = numerics::integrate_2d(
      f, 0.0, std::sqrt(s), [](double) { return 0.0; }, [rmax](double) { return rmax; });
  return std::sqrt(s) + inner / (2.0 * kPi);
}

McEstimate clo_mc_oracle(double s, double t, std::size_t samples, double step, std::uint64_t seed) {
  if (!(s > 0.0 && s < t && t < 1.0)) throw InvalidArgument("clo_mc_oracle needs 0 < s < t < 1");
  auto acc = parallel::replica_reduce(seed, samples, numerics::MeanAccumulator{},
                                      [&](Rng& rng, std::size_t, numerics::MeanAccumulator& a) {
                                        double last = 0.0;
                                        double ds = kNoPoint;
                                        walk_subordinator(0.5, step, rng, [&](double x) {
                                          last = x;
                                          if (x > s && x < ds) ds = x;
                                        });
                                        const double w = kPi / 2.0 * std::sqrt(1.0 - last);
                                        a.add(ds > t ? w : 0.0);
                                      });
  return {acc.mean(), acc.std_error(), acc.count};
}

DcgPair dcg_pair(double s, double t, std::int64_t N) {
  if (!(s > 0.0 && s < t && t < 1.0)) throw InvalidArgument("dcg_pair needs 0 < s < t < 1");
  if (N < 100) throw InvalidArgument("dcg_pair needs N >= 100");
  const auto i_max = static_cast<std::int64_t>(std::floor(s * static_cast<double>(N)));
  const auto j_min = static_cast<std::int64_t>(std::ceil(t * static_cast<double>(N)));
  if (j_min - i_max < 2) throw InvalidArgument("dcg_pair: s N and t N too close");

  std::vector<double> du(static_cast<std::size_t>(N) + 1, 0.0);
  for (std::int64_t n = 2; n <= N; ++n) {
    const double a = std::pow(static_cast<double>(n), -1.5);
    const double b = std::pow(static_cast<double>(n - 1), -1.5);
    du[static_cast<std::size_t>(n)] = a - b;
  }
  std::vector<double> root(static_cast<std::size_t>(N) + 1);
  for (std::int64_t n = 0; n <= N; ++n) root[static_cast<std::size_t>(n)] = std::sqrt(static_cast<double>(n));

  std::vector<double> rows(static_cast<std::size_t>(i_max), 0.0);
  parallel::for_each_index(rows.size(), [&](std::size_t k) {
    const std::int64_t i = static_cast<std::int64_t>(k) + 1;
    double inner = 0.0;
    for (std::int64_t j = j_min; j <= N; ++j) {
      inner += du[static_cast<std::size_t>(j - i)] * root[static_cast<std::size_t>(N - j)];
    }
    rows[k] = root[static_cast<std::size_t>(i)] * inner;
  });

  DcgPair out;
  out.finite_sum = numerics::pairwise_sum(rows) / root[static_cast<std::size_t>(N)];

  auto f = [](double w, double r) {
    const double d = 1.0 - r * r - w * w;
    return 4.0 * w * w * r * r / (d * d * std::sqrt(d));
  };
  const double rmax = std::sqrt(1.0 - t);
  out.limit = -1.5 * numerics::integrate_2d(
                         f, 0.0, std::sqrt(s), [](double) { return 0.0; }, [rmax](double) { return rmax; });
  return out;
}

KsReport ks_test(std::span<const double> sorted_samples, const std::function<double(double)>& cdf, double level,
                 double upper, double fixed_threshold) {
  if (sorted_samples.empty()) throw InvalidArgument("ks_test needs samples");
  KsReport r;
  r.n = sorted_samples.size();
  const double n = static_cast<double>(r.n);
  double d = 0.0;
  std::size_t below = 0;
  for (std::size_t i = 0; i < r.n; ++i) {
    const double x = sorted_samples[i];
    if (x > upper) break;
    const double f = cdf(x);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    below = i + 1;
  }
  if (std::isfinite(upper)) d = std::max(d, std::abs(static_cast<double>(below) / n - cdf(upper)));
  r.statistic = std::clamp(d, 0.0, 1.0);
  r.threshold = fixed_threshold > 0.0 ? fixed_threshold : numerics::kolmogorov_quantile(level) / std::sqrt(n);
  r.pass = r.statistic < r.threshold;
  return r;
}

double ks_two_sample_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("ks_two_sample_statistic needs samples");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

FidiReport fidi_convergence_check(const std::vector<ClosedSetSample>& sets, double alpha,
                                  const std::vector<double>& t_list, double level, std::size_t oracle_samples,
                                  std::uint64_t seed, double fixed_threshold) {
  if (sets.empty()) throw InvalidArgument("fidi_convergence_check needs sets");
  const LimitLawTable law(alpha);
  FidiReport rep;
  rep.pass = true;
  std::vector<std::vector<double>> d_of_t;
  for (double t : t_list) {
    std::vector<double> d;
    d.reserve(sets.size());
    for (const auto& s : sets) d.push_back(matheron_functionals(s, t).d);
    std::sort(d.begin(), d.end());
    FidiReport::PerT row;
    row.t = t;
    row.boundary_flag = law.dt_cdf(t, 1.0) < 0.05;
    const double widen = row.boundary_flag ? 2.0 : 1.0;
    row.ks = ks_test(d, [&](double y) { return y <= t ? 0.0 : law.dt_cdf(t, y); }, level, 1.0,
                     fixed_threshold * widen);
    if (fixed_threshold <= 0.0) {
      row.ks.threshold *= widen;
      row.ks.pass = row.ks.statistic < row.ks.threshold;
    }
    rep.pass = rep.pass && row.ks.pass;
    rep.marginals.push_back(row);
    std::vector<double> unsorted;
    unsorted.reserve(sets.size());
    for (const auto& s : sets) unsorted.push_back(matheron_functionals(s, t).d);
    d_of_t.push_back(std::move(unsorted));
  }

  constexpr int kGrid = 16;
  for (std::size_t k = 0; k + 1 < t_list.size(); ++k) {
    const double t1 = t_list[k];
    const double t2 = t_list[k + 1];
    if (!(t1 < t2)) continue;
    std::vector<std::pair<double, double>> oracle(oracle_samples);
    parallel::for_each_index(oracle_samples, [&](std::size_t r) {
      Rng rng = replica_rng(seed + k, r);
      const double d1 = law.sample_dt(t1, rng);
      const double d2 = d1 > t2 ? d1 : d1 + law.sample_dt(t2 - d1, rng);
      oracle[r] = {d1, d2};
    });

    auto grid_for = [&](double t) {
      std::vector<double> g(kGrid);
      // quantile grid of the limit law within (t, 1]
      const double top = law.dt_cdf(t, 1.0);
      for (int i = 1; i <= kGrid; ++i) {
        const double target = top * static_cast<double>(i) / kGrid;
        double lo = t, hi = 1.0;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          (law.dt_cdf(t, mid) < target ? lo : hi) = mid;
        }
        g[static_cast<std::size_t>(i - 1)] = hi;
      }
      return g;
    };
    const auto g1 = grid_for(t1);
    const auto g2 = grid_for(t2);

    auto joint_cdf = [](const auto& pairs, double y1, double y2) {
      std::size_t c = 0;
      for (const auto& p : pairs) c += (p.first <= y1 && p.second <= y2) ? 1 : 0;
      return static_cast<double>(c) / static_cast<double>(pairs.size());
    };
    std::vector<std::pair<double, double>> data(sets.size());
    for (std::size_t i = 0; i < sets.size(); ++i) data[i] = {d_of_t[k][i], d_of_t[k + 1][i]};

    double stat = 0.0;
    for (double y1 : g1) {
      for (double y2 : g2) {
        stat = std::max(stat, std::abs(joint_cdf(data, y1, y2) - joint_cdf(oracle, y1, y2)));
      }
    }
    FidiReport::Joint j;
    j.t1 = t1;
    j.t2 = t2;
    j.statistic = stat;
    const double nn = static_cast<double>(sets.size());
    const double mm = static_cast<double>(oracle_samples);
    j.threshold = fixed_threshold > 0.0 ? fixed_threshold
                                        : numerics::kolmogorov_quantile(level) * std::sqrt(1.0 / nn + 1.0 / mm);
    j.pass = j.statistic < j.threshold;
    rep.pass = rep.pass && j.pass;
    rep.joints.push_back(j);
  }
  return rep;
}

}  // namespace mrlab
