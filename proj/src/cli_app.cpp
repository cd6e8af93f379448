#include "mrlab/cli_app.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mrlab/artifact_io.hpp"
#include "mrlab/core_model.hpp"
#include "mrlab/error.hpp"
#include "mrlab/mrp_sim.hpp"
#include "mrlab/numerics.hpp"
#include "mrlab/parallel.hpp"
#include "mrlab/regen_limit.hpp"
#include "mrlab/walk_fluct.hpp"
#include "mrlab/wetting.hpp"

namespace mrlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One config block. Every key read is recorded with its resolved value;
/// finish() rejects keys nobody asked for.
class Section {
 public:
  Section(const json& root, std::string path) : path_(std::move(path)) {
    if (root.is_null()) return;
    if (!root.is_object()) throw ConfigError(path_ + ": expected an object");
    raw_ = root;
  }

  template <class T>
  T get(const std::string& key, T def) {
    used_.insert(key);
    if (!raw_.contains(key)) {
      resolved_[key] = def;
      return def;
    }
    try {
      T v = raw_.at(key).get<T>();
      resolved_[key] = v;
      return v;
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  json block(const std::string& key) {
    used_.insert(key);
    return raw_.contains(key) ? raw_.at(key) : json();
  }

  void put(const std::string& key, json v) { resolved_[key] = std::move(v); }

  json finish() const {
    for (const auto& [key, _] : raw_.items()) {
      if (!used_.count(key)) throw ConfigError(path_ + ": unknown key '" + key + "'");
    }
    return resolved_.is_null() ? json::object() : resolved_;
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  json raw_ = json::object();
  json resolved_ = json::object();
  std::set<std::string> used_;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& columns) : out_(path) {
    if (!out_) throw MissingArtifact("cannot write " + path.string());
    row_strings(columns);
  }
  template <class... Ts>
  void row(const Ts&... values) {
    std::vector<std::string> cells;
    (cells.push_back(cell(values)), ...);
    row_strings(cells);
  }

 private:
  static std::string cell(double v) { return fmt(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(bool b) { return b ? "1" : "0"; }
  template <class T>
  static std::string cell(T v) requires std::is_integral_v<T> { return std::to_string(v); }
  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }
  std::ofstream out_;
};

struct Check {
  std::string name;
  bool pass = false;
  bool skipped = false;
  json values;
};

struct Run {
  std::string command;
  fs::path out;
  std::uint64_t seed = 1;
  std::set<std::string> only;
  std::vector<std::string> known;
  std::vector<Check> checks;
  json config;

  bool enabled(const std::string& name) const { return only.empty() || only.count(name); }
  void record(const std::string& name, bool pass, json values) {
    checks.push_back({name, pass, false, std::move(values)});
  }
  fs::path file(const std::string& name) const { return out / name; }
  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : out / path;
  }
  std::uint64_t stage_seed(std::uint64_t stage) const { return derive_seed(seed, stage); }
};

json top_level(const json& config, const std::string& key) {
  return config.contains(key) ? config.at(key) : json();
}

// ---------------------------------------------------------------------------

HeavyTailKernel make_kernel(Run& run) {
  const json raw = top_level(run.config, "kernel");
  try {
    const KernelSpec spec = raw.is_null() ? KernelSpec{} : KernelSpec::from_json(raw);
    run.config["kernel"] = spec.to_json();
    return HeavyTailKernel(spec);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

void cmd_kernel_check(Run& run, Section& sec) {
  HeavyTailKernel k = make_kernel(run);
  const auto lambdas = sec.get<std::vector<double>>("lambdas", {1e-3, 1e-6});
  const auto stride = sec.get<std::size_t>("pair_stride", 4);
  const auto tail_n = sec.get<std::int64_t>("tail_n", 1'000'000);
  const auto tol = sec.get<double>("lem2_tolerance", 1e-2);
  run.config["kernel_check"] = sec.finish();
  if (lambdas.empty()) throw ConfigError("kernel_check.lambdas: need at least one value");

  if (run.enabled("row_mass")) {
    double err = 0.0;
    for (std::size_t x = 0; x < k.size(); ++x) {
      double s = 0.0;
      for (std::size_t y = 0; y < k.size(); ++y) s += k.grid().weight(y) * k.k(x, y);
      err = std::max(err, std::abs(s - 1.0));
    }
    run.record("row_mass", err < 1e-10, {{"max_abs_dev", err}});
  }
  if (run.enabled("tail_constant")) {
    const double n = static_cast<double>(tail_n);
    const double ratio = k.base_pmf(tail_n) * std::pow(n, 1.0 + k.alpha()) / k.L()(n) / k.tail_const();
    run.record("tail_constant", std::abs(ratio - 1.0) < 1e-2, {{"n", tail_n}, {"ratio", ratio}});
  }
  if (run.enabled("lem2")) {
    const auto rows = interarrival_laplace_check(k, lambdas, stride);
    Csv csv(run.file("lem2.csv"), {"lambda", "sup_abs_dev", "sup_rel_dev", "scalar_ratio"});
    for (const auto& r : rows) csv.row(r.lambda, r.sup_abs_dev, r.sup_rel_dev, r.scalar_ratio);
    const auto& last = rows.back();
    run.record("lem2", last.sup_rel_dev < tol, {{"lambda", last.lambda}, {"sup_rel_dev", last.sup_rel_dev}});
  }
}

void cmd_mrp(Run& run, Section& sec) {
  HeavyTailKernel k = make_kernel(run);
  const auto x0 = sec.get<std::size_t>("x0", 0);
  const auto horizons = sec.get<std::vector<std::int64_t>>("horizons", {1000, 10000});
  const auto replicas = sec.get<std::size_t>("replicas", 20000);
  const auto cells = sec.get<std::size_t>("cells", 4);
  const auto lambda = sec.get<double>("lambda", 1e-3);
  const auto lap_replicas = sec.get<std::size_t>("laplace_replicas", 20000);
  const auto window = sec.get<std::vector<std::int64_t>>("window", {9000, 10000});
  const auto win_replicas = sec.get<std::size_t>("window_replicas", 20000);
  const auto tol = sec.get<double>("tolerance", 0.10);
  run.config["mrp"] = sec.finish();
  if (horizons.empty() || window.size() != 2 || x0 >= k.size())
    throw ConfigError("mrp: need horizons, a two-element window and x0 inside the grid");

  const auto pi = stationary_distribution(k);
  if (run.enabled("mp2")) {
    const auto es = empirical_mass_functions(k, x0, horizons, replicas, run.stage_seed(1), cells);
    Csv csv(run.file("mp2.csv"), {"n", "cell", "estimate", "std_error", "limit", "z"});
    Mp2Report last;
    for (const auto& e : es) {
      last = mp2_check(e, k, pi);
      for (std::size_t c = 0; c < last.cells.size(); ++c) {
        const auto& r = last.cells[c];
        csv.row(e.n, c, r.estimate, r.std_error, r.limit, r.z);
      }
      csv.row(e.n, "total", last.total.estimate, last.total.std_error, last.total.limit, last.total.z);
    }
    run.record("mp2", last.max_rel_dev < tol && last.total.rel_dev < tol,
               {{"n", last.n}, {"limit_constant", last.limit_constant}, {"total_rel_dev", last.total.rel_dev},
                {"max_cell_rel_dev", last.max_rel_dev}});
  }
  if (run.enabled("laplace")) {
    const auto lap = laplace_mass_check(k, pi, x0, lambda, lap_replicas, run.stage_seed(2), cells);
    Csv csv(run.file("laplace.csv"), {"lambda", "cell", "estimate", "std_error", "limit", "z"});
    for (std::size_t c = 0; c < lap.cells.size(); ++c) {
      const auto& r = lap.cells[c];
      csv.row(lambda, c, r.estimate, r.std_error, r.limit, r.z);
    }
    csv.row(lambda, "total", lap.total.estimate, lap.total.std_error, lap.total.limit, lap.total.z);
    run.record("laplace", lap.max_rel_dev < tol, {{"lambda", lambda}, {"max_cell_rel_dev", lap.max_rel_dev}});
  }
  if (run.enabled("green")) {
    const auto g = green_function_check(k.alpha(), k.L(), window[0], window[1], win_replicas, run.stage_seed(3));
    Csv csv(run.file("green.csv"), {"n1", "n2", "estimate", "std_error", "analytic", "z"});
    csv.row(g.n1, g.n2, g.estimate, g.std_error, g.analytic, g.z);
    run.record("green", g.rel_dev < tol, {{"estimate", g.estimate}, {"analytic", g.analytic}, {"rel_dev", g.rel_dev}});
  }
}

void cmd_regen(Run& run, Section& sec) {
  const auto source = sec.get<std::string>("source", "mrp");
  const auto N = sec.get<std::int64_t>("N", 10000);
  const auto samples = sec.get<std::size_t>("samples", 5000);
  const auto step = sec.get<double>("step", 1e-4);
  const auto t_list = sec.get<std::vector<double>>("t_list", {0.3});
  const auto ks_tol = sec.get<double>("ks_tolerance", 0.03);
  const auto s = sec.get<double>("s", 0.25);
  const auto t = sec.get<double>("t", 0.75);
  const auto oracle_samples = sec.get<std::size_t>("oracle_samples", 100000);
  const auto oracle_step = sec.get<double>("oracle_step", 1e-3);
  const auto dcg_N = sec.get<std::int64_t>("dcg_N", 100000);
  const auto x0 = sec.get<std::size_t>("x0", 0);
  double alpha = sec.get<double>("alpha", 0.5);
  run.config["regen"] = sec.finish();
  if (source != "mrp" && source != "subordinator") throw ConfigError("regen.source: expected mrp|subordinator");

  if (run.enabled("ks")) {
    std::vector<ClosedSetSample> sets(samples);
    if (source == "mrp") {
      HeavyTailKernel k = make_kernel(run);
      alpha = k.alpha();
      if (x0 >= k.size()) throw ConfigError("regen.x0 outside the grid");
      parallel::for_each_index(samples, [&](std::size_t i) {
        Rng rng = replica_rng(run.stage_seed(1), i);
        sets[i] = rescaled_contact_set(simulate_mrp(k, x0, N, rng), N);
      });
    } else {
      parallel::for_each_index(samples, [&](std::size_t i) {
        Rng rng = replica_rng(run.stage_seed(1), i);
        sets[i] = sample_regenerative_set(alpha, step, rng);
      });
    }
    Csv csv(run.file("ks.csv"), {"t", "statistic", "n", "threshold", "pass"});
    bool pass = true;
    json per_t = json::array();
    for (double tt : t_list) {
      std::vector<double> d;
      d.reserve(sets.size());
      for (const auto& set : sets) d.push_back(matheron_functionals(set, tt).d);
      std::sort(d.begin(), d.end());
      const auto r = ks_test(d, [&](double y) { return y <= tt ? 0.0 : dt_law_cdf(alpha, tt, y); }, 0.01, 1.0, ks_tol);
      csv.row(tt, r.statistic, r.n, r.threshold, r.pass);
      pass = pass && r.pass;
      per_t.push_back({{"t", tt}, {"statistic", r.statistic}});
    }
    run.record("ks", pass, {{"alpha", alpha}, {"per_t", per_t}, {"tolerance", ks_tol}});
  }
  if (run.enabled("cdf_point")) {
    const double v = dt_law_cdf(0.5, 1.0, 2.0);
    run.record("cdf_point", std::abs(v - 0.5) < 1e-10, {{"P(d_1 <= 2)", v}});
  }
  if (run.enabled("clo_oracle")) {
    const auto mc = clo_mc_oracle(s, t, oracle_samples, oracle_step, run.stage_seed(2));
    const double exact = clo_probability(s, t);
    run.record("clo_oracle", std::abs(mc.estimate - exact) < 3.0 * mc.std_error,
               {{"quadrature", exact}, {"mc", mc.estimate}, {"mc_se", mc.std_error}});
  }
  if (run.enabled("dcg")) {
    const auto p = dcg_pair(s, t, dcg_N);
    run.record("dcg", std::abs(p.finite_sum / p.limit - 1.0) < 0.02,
               {{"finite_sum", p.finite_sum}, {"limit", p.limit}, {"N", dcg_N}});
  }
}

void cmd_walk(Run& run, Section& checks) {
  WalkModel model;
  ConstrainedKernelOptions opt;
  try {
    const json wm = top_level(run.config, "walk");
    model = wm.is_null() ? WalkModel{} : WalkModel::from_json(wm);
    model.validate();
    const json tm = top_level(run.config, "tensor");
    opt = tm.is_null() ? ConstrainedKernelOptions{} : ConstrainedKernelOptions::from_json(tm);
    if (tm.is_null() || !tm.contains("seed")) opt.seed = run.stage_seed(1);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  run.config["walk"] = model.to_json();
  run.config["tensor"] = opt.to_json();
  const auto n_list = checks.get<std::vector<std::int64_t>>("n_list", {64, 512});
  const auto mc_n_max = checks.get<std::int64_t>("mc_n_max", 8);
  const auto mc_replicas = checks.get<std::size_t>("mc_replicas", 1'000'000);
  const auto mc_bins = checks.get<std::size_t>("mc_bins", 4);
  auto mc_x = checks.get<std::vector<std::size_t>>("mc_x", {0, opt.G / 2, opt.G - 1});
  const auto points = checks.get<std::vector<double>>("ladder_points", {0.0, 0.25, 0.5, 0.75, 1.0});
  run.config["walk_checks"] = checks.finish();

  const auto ladders = ladder_tail_table(model, opt.ladder_replicas, opt.seed, opt.ladder_cap);
  {
    Csv csv(run.file("ladder.csv"), {"r", "p_ascending", "se_ascending", "p_descending", "se_descending"});
    for (const auto& r : ladder_tail_probs(ladders, points))
      csv.row(r.r, r.p_ascending, r.se_ascending, r.p_descending, r.se_descending);
  }
  const auto tensor = constrained_kernel(model, opt, ladders);
  save_tensor(run.file("tensor.mrlb"), tensor);

  if (run.enabled("ladder_cap")) run.record("ladder_cap", !ladders.cap_warning(), {{"cap_rate", ladders.cap_rate()}});
  if (run.enabled("balance")) {
    run.record("balance", tensor.max_balance_error() < 1e-3,
               {{"max_balance_error", tensor.max_balance_error()},
                {"max_truncation", *std::max_element(tensor.truncation.begin(), tensor.truncation.end())}});
  }
  if (run.enabled("thm_pr")) {
    const auto rep = thm_pr_check(tensor, n_list);
    Csv csv(run.file("thm_pr.csv"), {"n", "e"});
    json rows = json::array();
    for (const auto& r : rep.rows) {
      csv.row(r.n, r.e);
      rows.push_back({{"n", r.n}, {"e", r.e}});
    }
    const bool pass = rep.rows.back().e < 0.10 && rep.rows.back().e < rep.rows.front().e;
    run.record("thm_pr", pass, {{"rows", rows}, {"decreasing", rep.decreasing}});
  }
  if (run.enabled("kernel_mc")) {
    Csv csv(run.file("kernel_mc.csv"), {"n", "x", "bin", "mc", "mc_se", "quadrature", "z"});
    double worst = 0.0;
    for (std::int64_t n = 1; n <= mc_n_max; ++n) {
      for (std::size_t x : mc_x) {
        if (x >= tensor.G()) throw ConfigError("walk_checks.mc_x: index outside the grid");
        const auto mc = constrained_kernel_mc(model, tensor.grid.node(x), n, mc_bins, mc_replicas,
                                              derive_seed(run.stage_seed(2), static_cast<std::uint64_t>(n) * 4096 + x));
        std::vector<double> row(tensor.G());
        for (std::size_t y = 0; y < tensor.G(); ++y) row[y] = tensor.at(n, x, y);
        for (std::size_t b = 0; b < mc_bins; ++b) {
          const double lo = model.a * static_cast<double>(b) / static_cast<double>(mc_bins);
          const double hi = model.a * static_cast<double>(b + 1) / static_cast<double>(mc_bins);
          const double q = strip_integral(tensor.grid, row, lo, hi);
          const double z = mc.bin_se[b] > 0.0 ? (mc.bin_mass[b] - q) / mc.bin_se[b] : 0.0;
          worst = std::max(worst, std::abs(z));
          csv.row(n, x, b, mc.bin_mass[b], mc.bin_se[b], q, z);
        }
      }
    }
    run.record("kernel_mc", worst < 3.0, {{"max_abs_z", worst}, {"n_max", mc_n_max}});
  }
}

ConstrainedKernelTensor load_tensor_for(const Run& run, const std::string& path) {
  try {
    return load_tensor(run.resolve(path));
  } catch (const MissingArtifact& e) {
    throw MissingArtifact(std::string(e.what()) + " (produced by the `walk` command)");
  }
}

void cmd_betac(Run& run, Section& sec) {
  const auto paths = sec.get<std::vector<std::string>>("tensor_paths", {"tensor.mrlb"});
  const auto tol = sec.get<double>("stability", 1e-3);
  run.config["betac"] = sec.finish();
  if (paths.empty()) throw ConfigError("betac.tensor_paths: need at least one tensor");
  Csv csv(run.file("betac.csv"), {"tensor", "G", "n_max", "halfline_cells", "beta_c", "diff_from_first"});
  std::vector<double> values;
  json rows = json::array();
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto t = load_tensor_for(run, paths[i]);
    const auto sp = spectral_radius(build_blambda(t, 0.0, TailMode::PhiTail));
    const double bc = -std::log(sp.delta);
    if (i == 0) save_spectral(run.file("spectral.mrlb"), sp, bc, 0.0);
    values.push_back(bc);
    csv.row(paths[i], t.G(), t.n_max, t.halfline_cells, bc, bc - values.front());
    rows.push_back({{"tensor", paths[i]}, {"G", t.G()}, {"beta_c", bc}, {"diff_from_first", bc - values.front()}});
  }
  if (run.enabled("positive"))
    run.record("positive", *std::min_element(values.begin(), values.end()) > 0.0, {{"values", rows}});
  if (run.enabled("stability") && values.size() > 1) {
    double worst = 0.0;
    for (double v : values) worst = std::max(worst, std::abs(v - values.front()));
    run.record("stability", worst < tol, {{"max_abs_diff", worst}, {"values", rows}});
  }
}

void cmd_free_energy(Run& run, Section& sec) {
  const auto path = sec.get<std::string>("tensor_path", "tensor.mrlb");
  const auto offsets = sec.get<std::vector<double>>("offsets", {-1.0, -0.75, -0.5, -0.25, 0.0, 0.1, 0.25, 0.5, 1.0, 2.0});
  const auto inv_offsets = sec.get<std::vector<double>>("invmp_offsets", {-0.5, -0.2, 0.0, 0.3});
  const auto row_tol = sec.get<double>("row_tolerance", 1e-2);
  run.config["free_energy"] = sec.finish();
  const auto t = load_tensor_for(run, path);
  const double bc = beta_critical(t);

  std::vector<std::pair<double, double>> curve;
  {
    Csv csv(run.file("free_energy.csv"), {"offset", "beta", "F", "bound"});
    for (double off : offsets) {
      const double b = bc + off;
      const double F = free_energy(t, b, bc, 1e-10);
      curve.emplace_back(off, F);
      csv.row(off, b, F, std::max(b, 0.0));
    }
  }
  if (run.enabled("zero_subcritical")) {
    bool ok = true;
    for (auto [off, F] : curve)
      if (off <= 0.0 && off >= -1.0) ok = ok && F == 0.0;
    run.record("zero_subcritical", ok, {{"beta_c", bc}});
  }
  if (run.enabled("increasing")) {
    bool ok = true;
    double prev = 0.0;
    for (auto [off, F] : curve) {
      if (off <= 0.0) continue;
      ok = ok && F > prev;
      prev = F;
    }
    run.record("increasing", ok, {{"beta_c", bc}});
  }
  if (run.enabled("bound")) {
    bool ok = true;
    for (auto [off, F] : curve) ok = ok && F <= std::max(bc + off, 0.0);
    run.record("bound", ok, json::object());
  }
  if (run.enabled("invmp")) {
    Csv csv(run.file("invmp.csv"), {"offset", "x", "row_mass", "expected"});
    double worst = 0.0;
    for (double off : inv_offsets) {
      const auto K = tilted_kernel(t, bc + off, bc, 1.0);
      for (std::size_t x = 0; x < t.G(); ++x) csv.row(off, t.grid.node(x), K.row_masses[x], K.expected_row_mass());
      worst = std::max(worst, K.max_row_mass_error());
    }
    run.record("invmp", worst < row_tol, {{"max_abs_dev", worst}});
  }
}

void cmd_critical(Run& run, Section& sec) {
  const auto path = sec.get<std::string>("tensor_path", "tensor.mrlb");
  const auto N = sec.get<std::int64_t>("N", 2000);
  const auto paths = sec.get<std::size_t>("paths", 5000);
  const auto s = sec.get<double>("s", 0.25);
  const auto tt = sec.get<double>("t", 0.75);
  const auto estz_N = sec.get<std::vector<std::int64_t>>("estz_N", {400, 500, 600, 700, 800});
  const auto x0 = sec.get<std::size_t>("x0", 0);
  const auto tol = sec.get<double>("tolerance", 0.03);
  const auto var_tol = sec.get<double>("estz_variation", 0.03);
  const auto const_tol = sec.get<double>("estz_constant", 0.10);
  const auto cross_tol = sec.get<double>("estz_cross_x", 0.02);
  const auto slope_N = sec.get<std::vector<std::int64_t>>("slope_N", {500, 1000, 2000});
  const auto slope_paths = sec.get<std::size_t>("slope_paths", 2000);
  run.config["critical"] = sec.finish();
  if (estz_N.empty() || slope_N.size() < 2) throw ConfigError("critical: need estz_N and at least two slope_N");

  const auto t = load_tensor_for(run, path);
  if (x0 >= t.G()) throw ConfigError("critical.x0 outside the grid");
  const auto sp = spectral_radius(build_blambda(t, 0.0, TailMode::PhiTail));
  const double bc = -std::log(sp.delta);
  const std::int64_t horizon = std::max({N, *std::max_element(estz_N.begin(), estz_N.end()),
                                         *std::max_element(slope_N.begin(), slope_N.end())});
  const auto Z = partition_table(t, bc, horizon);
  save_partition(run.file("partition.mrlb"), Z);

  if (run.enabled("estz_variation") || run.enabled("estz_constant") || run.enabled("estz_cross_x")) {
    const auto rep = estz_check(Z, sp, estz_N);
    Csv csv(run.file("estz.csv"), {"N", "x", "R", "C"});
    for (std::size_t i = 0; i < rep.N_list.size(); ++i)
      for (std::size_t x = 0; x < t.G(); ++x) csv.row(rep.N_list[i], t.grid.node(x), rep.R[i][x], rep.C);
    const json v = {{"C", rep.C}, {"C_shorthand", rep.C_shorthand}, {"max_variation", rep.max_variation},
                    {"max_deviation", rep.max_deviation}, {"max_cross_x", rep.max_cross_x}};
    if (run.enabled("estz_variation")) run.record("estz_variation", rep.max_variation < var_tol, v);
    if (run.enabled("estz_constant")) run.record("estz_constant", rep.max_deviation < const_tol, v);
    if (run.enabled("estz_cross_x")) run.record("estz_cross_x", rep.max_cross_x < cross_tol, v);
  }
  if (run.enabled("main2_boundary") || run.enabled("main2_clo")) {
    const auto table = N == horizon ? Z : partition_table(t, bc, N);
    const auto sets = sample_critical_paths(table, x0, paths, run.stage_seed(1));
    const auto r = main2_check(sets, s, tt);
    Csv csv(run.file("main2.csv"), {"quantity", "estimate", "std_error", "limit"});
    csv.row("P(d_s>=1)", r.p_boundary, r.se_boundary, r.boundary_limit);
    csv.row("P(d_s>t)", r.p_clo, r.se_clo, r.clo_limit);
    if (run.enabled("main2_boundary"))
      run.record("main2_boundary", std::abs(r.p_boundary - r.boundary_limit) <= tol && r.d_at_least_s,
                 {{"estimate", r.p_boundary}, {"limit", r.boundary_limit}, {"N", N}, {"paths", paths}});
    if (run.enabled("main2_clo"))
      run.record("main2_clo", std::abs(r.p_clo - r.clo_limit) <= tol,
                 {{"estimate", r.p_clo}, {"limit", r.clo_limit}, {"N", N}, {"paths", paths}});
  }
  if (run.enabled("contact_slope")) {
    Csv csv(run.file("contacts.csv"), {"N", "mean_contacts"});
    std::vector<double> means;
    for (std::int64_t n : slope_N) {
      const auto table = partition_table(t, bc, n);
      const auto sets = sample_critical_paths(table, x0, slope_paths, run.stage_seed(2));
      double c = 0.0;
      for (const auto& set : sets) c += static_cast<double>(set.points.size() - 1);
      means.push_back(c / static_cast<double>(slope_paths));
      csv.row(n, means.back());
    }
    const double slope = std::log(means.back() / means.front()) /
                         std::log(static_cast<double>(slope_N.back()) / static_cast<double>(slope_N.front()));
    run.record("contact_slope", std::abs(slope - 0.5) < 0.05, {{"slope", slope}});
  }
}

int cmd_report(const fs::path& dir) {
  if (!fs::exists(dir)) throw MissingArtifact("report: directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > 13 && name.ends_with(".summary.json")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw MissingArtifact("report: no *.summary.json under " + dir.string());
  json runs = json::array();
  bool pass = true;
  for (const auto& f : files) {
    std::ifstream in(f);
    json j = json::parse(in);
    pass = pass && j.value("pass", false);
    runs.push_back({{"file", fs::relative(f, dir).string()},
                    {"command", j.value("command", "")},
                    {"pass", j.value("pass", false)},
                    {"checks", j.value("checks", json::array())}});
  }
  const json report = {{"version", MRLAB_VERSION}, {"runs", runs}, {"pass", pass}};
  std::ofstream(dir / "report.json") << report.dump(2) << '\n';
  for (const auto& r : runs)
    for (const auto& c : r["checks"])
      std::cout << (c.value("skipped", false) ? "SKIP" : c.value("pass", false) ? "PASS" : "FAIL") << "  "
                << r["command"].get<std::string>() << "." << c.value("name", "") << '\n';
  return pass ? kExitPass : kExitCheckFailed;
}

struct CommandInfo {
  std::string name;
  std::string description;
  std::string section;
  std::vector<std::string> checks;
  void (*fn)(Run&, Section&);
};

const std::vector<CommandInfo>& commands() {
  static const std::vector<CommandInfo> list = {
      {"kernel-check",
       "Kernel sanity: row masses, tail constant, interarrival Laplace asymptotics.\n"
       "CSV lem2.csv: lambda,sup_abs_dev,sup_rel_dev,scalar_ratio",
       "kernel_check", {"row_mass", "tail_constant", "lem2"}, cmd_kernel_check},
      {"mrp",
       "Markov renewal mass function, Laplace mass and renewal window checks.\n"
       "CSV mp2.csv, laplace.csv: n|lambda,cell,estimate,std_error,limit,z; green.csv: n1,n2,estimate,std_error,analytic,z",
       "mrp", {"mp2", "laplace", "green"}, cmd_mrp},
      {"regen",
       "Rescaled contact sets against the regenerative-set limit laws.\n"
       "CSV ks.csv: t,statistic,n,threshold,pass",
       "regen", {"ks", "cdf_point", "clo_oracle", "dcg"}, cmd_regen},
      {"walk",
       "Ladder tails, constrained kernel tensor (tensor.mrlb) and its checks.\n"
       "CSV ladder.csv: r,p_ascending,se_ascending,p_descending,se_descending; thm_pr.csv: n,e;\n"
       "kernel_mc.csv: n,x,bin,mc,mc_se,quadrature,z",
       "walk_checks", {"ladder_cap", "balance", "thm_pr", "kernel_mc"}, cmd_walk},
      {"wetting-betac",
       "Critical point from one or more tensors, with differences to the first.\n"
       "CSV betac.csv: tensor,G,n_max,halfline_cells,beta_c,diff_from_first",
       "betac", {"positive", "stability"}, cmd_betac},
      {"wetting-free-energy",
       "Free energy curve and tilted-kernel row masses.\n"
       "CSV free_energy.csv: offset,beta,F,bound; invmp.csv: offset,x,row_mass,expected",
       "free_energy", {"zero_subcritical", "increasing", "bound", "invmp"}, cmd_free_energy},
      {"wetting-critical",
       "Critical partition function asymptotics and contact-set law.\n"
       "CSV estz.csv: N,x,R,C; main2.csv: quantity,estimate,std_error,limit; contacts.csv: N,mean_contacts",
       "critical", {"estz_variation", "estz_constant", "estz_cross_x", "main2_boundary", "main2_clo", "contact_slope"},
       cmd_critical},
  };
  return list;
}

const std::set<std::string>& top_level_keys() {
  static const std::set<std::string> keys = {"seed", "kernel", "kernel_check", "mrp", "regen", "walk",
                                             "tensor", "walk_checks", "betac", "free_energy", "critical"};
  return keys;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int execute(const CommandInfo& info, const std::string& config_path, std::optional<std::uint64_t> seed_flag,
            const fs::path& out, const std::string& check_flag) {
  json config = json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot read config " + config_path);
    try {
      config = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(config_path + ": " + e.what());
    }
    if (!config.is_object()) throw ConfigError(config_path + ": top level must be an object");
    for (const auto& [key, _] : config.items())
      if (!top_level_keys().count(key)) throw ConfigError(config_path + ": unknown key '" + key + "'");
  }
  Run run;
  run.command = info.name;
  run.out = out;
  run.known = info.checks;
  run.seed = seed_flag ? *seed_flag : config.value("seed", std::uint64_t{1});
  for (const auto& c : split_list(check_flag)) {
    if (std::find(info.checks.begin(), info.checks.end(), c) == info.checks.end())
      throw ConfigError("--check: '" + c + "' is not a check of " + info.name);
    run.only.insert(c);
  }
  run.config = config;
  run.config["seed"] = run.seed;
  fs::create_directories(out);

  const auto t0 = std::chrono::steady_clock::now();
  Section sec(top_level(config, info.section), info.section);
  info.fn(run, sec);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json resolved = json::object();
  resolved["seed"] = run.seed;
  resolved[info.section] = run.config.contains(info.section) ? run.config[info.section] : json::object();
  for (const char* k : {"kernel", "walk", "tensor"})
    if (run.config.contains(k)) resolved[k] = run.config[k];
  const std::string text = resolved.dump(2);
  std::ofstream(run.file(info.name + ".config.json")) << text << '\n';

  for (const auto& name : info.checks) {
    const bool present = std::any_of(run.checks.begin(), run.checks.end(), [&](const Check& c) { return c.name == name; });
    if (!present) run.checks.push_back({name, true, true, json::object()});
  }
  bool pass = true;
  json checks = json::array();
  for (const auto& c : run.checks) {
    if (!c.skipped) pass = pass && c.pass;
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"skipped", c.skipped}, {"values", c.values}});
    std::cout << (c.skipped ? "SKIP" : c.pass ? "PASS" : "FAIL") << "  " << info.name << "." << c.name << '\n';
  }
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(text)));
  const json summary = {{"command", info.name}, {"version", MRLAB_VERSION}, {"config_hash", hash},
                        {"seed", run.seed},     {"checks", checks},         {"pass", pass},
                        {"elapsed_seconds", elapsed}};
  std::ofstream(run.file(info.name + ".summary.json")) << summary.dump(2) << '\n';
  return pass ? kExitPass : kExitCheckFailed;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"mrlab: Markov renewal, regenerative-set and strip wetting checks"};
  app.set_version_flag("--version", std::string(MRLAB_VERSION));
  app.fallthrough();
  app.require_subcommand(1);
  std::string config_path, check_flag;
  std::uint64_t seed = 0;
  std::string out = "mrlab-out";
  unsigned workers = 1;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "64-bit seed (overrides the config)");
  app.add_option("--out", out, "output directory");
  app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--check", check_flag, "comma-separated subset of checks to run");

  std::map<std::string, CLI::App*> subs;
  for (const auto& c : commands()) subs[c.name] = app.add_subcommand(c.name, c.description);
  auto* report = app.add_subcommand("report", "Aggregate every *.summary.json under --out into report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  try {
    parallel::set_workers(workers);
    if (report->parsed()) return cmd_report(out);
    for (const auto& c : commands()) {
      if (subs[c.name]->parsed()) {
        std::optional<std::uint64_t> s;
        if (seed_opt->count()) s = seed;
        return execute(c, config_path, s, out, check_flag);
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid parameter: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const MissingArtifact& e) {
    std::cerr << "missing artifact: " << e.what() << '\n';
    return kExitMissingArtifact;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
  return kExitConfigError;
}

}  // namespace mrlab
