#include "speclab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "speclab/bounds.hpp"
#include "speclab/errors.hpp"
#include "speclab/estimators.hpp"
#include "speclab/graph_process.hpp"
#include "speclab/parallel.hpp"
#include "speclab/rng.hpp"
#include "speclab/spectra.hpp"
#include "speclab/structure.hpp"

namespace speclab {
namespace {

using nlohmann::json;

constexpr std::pair<ExperimentKind, const char*> kKindNames[] = {
    {ExperimentKind::mean_curve, "mean_curve"},   {ExperimentKind::variance_sweep, "variance_sweep"},
    {ExperimentKind::sup_process, "sup_process"}, {ExperimentKind::deloc_audit, "deloc_audit"},
    {ExperimentKind::moments, "moments"},         {ExperimentKind::dkw, "dkw"},
    {ExperimentKind::sparse_regime, "sparse_regime"}, {ExperimentKind::bounds_table, "bounds_table"},
};

const std::set<std::string> kConfigKeys = {
    "experiment", "n", "n_values", "p", "p_grid", "q", "replicates", "seed", "threads", "solver",
    "tol", "max_iter", "out", "vplus_edges", "vplus_inner", "vplus_replicates", "p_range",
    "curve_replicates", "curve_points", "k_values", "t_grid", "eps_grid", "linf_threshold",
    "tree_sizes"};

template <typename T>
T get_field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& target) {
  if (j.contains(key)) target = get_field<T>(j, key);
}

struct Stats {
  double mean = 0.0;
  double std_error = 0.0;
  double max = -std::numeric_limits<double>::infinity();
};

Stats stats_of(std::span<const double> xs) {
  Stats s;
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (const double x : xs) {
    ss += (x - s.mean) * (x - s.mean);
    s.max = std::max(s.max, x);
  }
  s.std_error = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1) /
                                          static_cast<double>(xs.size()))
                              : std::numeric_limits<double>::infinity();
  return s;
}

// Standard error of a Bernoulli frequency.
double frequency_se(double f, std::size_t count) {
  return std::sqrt(std::max(f * (1.0 - f), 0.0) / static_cast<double>(count));
}

std::string fmt(double x) { return format_cell(Cell{x}); }

SolverSettings solver_of(const ExperimentConfig& c) {
  SolverSettings s;
  s.tol = c.tol;
  s.max_iter = c.max_iter;
  return s;
}

Cell u64(std::uint64_t v) { return Cell{v}; }
Cell real(double v) { return Cell{v}; }
Cell flag(bool v) { return Cell{v}; }
Cell text(std::string v) { return Cell{std::move(v)}; }
Cell maybe(std::optional<double> v) { return v ? Cell{*v} : Cell{}; }

// Runs fn(index, seed) for every replicate; failures are recorded on the
// report and dropped from the result, which stays in replicate order.
template <typename T, typename Fn>
std::vector<T> collect(std::size_t count, std::size_t first_index, std::uint64_t base,
                       std::size_t threads, Report& report, Fn&& fn) {
  struct Outcome {
    std::optional<T> value;
    std::string error;
  };
  auto outcomes = parallel_map<Outcome>(count, threads, [&](std::size_t r) {
    const std::uint64_t s = replicate_seed(base, first_index + r);
    Outcome o;
    try {
      o.value.emplace(fn(first_index + r, s));
    } catch (const std::exception& e) {
      o.error = e.what();
    }
    return o;
  });
  std::vector<T> out;
  out.reserve(count);
  for (std::size_t r = 0; r < count; ++r) {
    if (outcomes[r].value) {
      out.push_back(std::move(*outcomes[r].value));
    } else {
      report.failures.push_back(
          {replicate_seed(base, first_index + r), first_index + r, outcomes[r].error});
    }
  }
  return out;
}

void add_check(Report& report, std::string name, bool passed, std::string detail, bool hard = true) {
  report.checks.push_back({std::move(name), passed, hard, std::move(detail)});
}

void require_replicates(const Report& report, std::size_t have, std::size_t need) {
  if (have < need) {
    throw std::runtime_error("only " + std::to_string(have) + " replicates succeeded; " +
                             std::to_string(report.failures.size()) + " failed");
  }
}

// ---------------------------------------------------------------------------

void run_mean_curve(const ExperimentConfig& c, Report& report) {
  const std::size_t n = c.n_values[0];
  const auto results = collect<ReplicateResult>(
      c.replicates, 0, c.seed, c.threads, report,
      [&](std::size_t, std::uint64_t s) { return run_replicate(n, c.p_grid, s, solver_of(c)); });
  require_replicates(report, results.size(), 2);
  const MeanCurve curve = summarize_curve(c.p_grid, results);

  report.columns = {"seed", "n", "p", "replicates", "mean", "std_error", "bracket_lower",
                    "bracket_upper", "bracket_valid"};
  auto& plot = report.plots["mean_curve"];
  bool monotone = true;
  for (std::size_t k = 0; k < c.p_grid.size(); ++k) {
    const double p = c.p_grid[k];
    const LambdaBracket b = lambda_bracket(static_cast<double>(n), p, c.q.value_or(p));
    const bool valid = b.lower.valid && b.upper.valid;
    report.rows.push_back({u64(c.seed), u64(n), real(p), u64(curve.replicates), real(curve.means[k]),
                           real(curve.std_errors[k]), real(b.lower.value), real(b.upper.value),
                           flag(valid)});
    plot.push_back({"mean", p, curve.means[k], curve.std_errors[k], b.upper.value, valid});
    plot.push_back({"bracket_lower", p, b.lower.value, 0.0, b.lower.value, b.lower.valid});
    plot.push_back({"bracket_upper", p, b.upper.value, 0.0, b.upper.value, b.upper.valid});
    if (k > 0) {
      const double slack = 2.0 * std::hypot(curve.std_errors[k], curve.std_errors[k - 1]);
      monotone = monotone && curve.means[k] >= curve.means[k - 1] - slack;
    }
  }
  add_check(report, "means nondecreasing in p within 2 standard errors", monotone, "");
}

void run_variance_sweep(const ExperimentConfig& c, Report& report) {
  const std::size_t n = c.n_values[0];
  const std::size_t grid = c.p_grid.size();
  struct Sample {
    std::vector<double> lambdas;
    std::vector<double> vplus;
  };
  const std::size_t vplus_reps = c.vplus_edges ? c.vplus_replicates : 0;
  const auto samples = collect<Sample>(
      c.replicates, 0, c.seed, c.threads, report, [&](std::size_t r, std::uint64_t s) {
        Sample out;
        out.lambdas = run_replicate(n, c.p_grid, s, solver_of(c)).lambdas;
        if (r < vplus_reps) {
          const EdgeWeightTable table = new_process(n, s);
          for (std::size_t k = 0; k < grid; ++k) {
            out.vplus.push_back(efron_stein_vplus(table, c.p_grid[k], c.vplus_edges, c.vplus_inner,
                                                  replicate_seed(s, k), solver_of(c))
                                    .estimate);
          }
        }
        return out;
      });
  require_replicates(report, samples.size(), 2);

  report.columns = {"seed", "n", "p", "replicates", "var_hat", "std_error", "var_over_p",
                    "bound_Cp", "bound_Cp_valid", "bound_16", "vplus_replicates", "vplus_mean",
                    "vplus_std_error", "vplus_max"};
  auto& plot = report.plots["variance_sweep"];
  auto& vplot = report.plots["vplus"];
  bool cp_ok = true, akv_ok = true, es_ok = true, four_ok = true;
  std::string cp_detail, akv_detail, es_detail, four_detail;
  for (std::size_t k = 0; k < grid; ++k) {
    const double p = c.p_grid[k];
    std::vector<double> lambdas, vplus;
    for (const Sample& s : samples) {
      lambdas.push_back(s.lambdas[k]);
      if (!s.vplus.empty()) vplus.push_back(s.vplus[k]);
    }
    const SampleVariance v = sample_variance(lambdas);
    const VarianceBound vb = variance_bound(p, static_cast<double>(n));
    std::vector<Cell> row = {u64(c.seed), u64(n), real(p), u64(lambdas.size()), real(v.variance),
                             real(v.std_error), p > 0.0 ? real(v.variance / p) : Cell{},
                             real(vb.moment_form.value), flag(vb.moment_form.valid),
                             real(vb.akv_form.value), u64(vplus.size())};
    plot.push_back({"var_hat", p, v.variance, v.std_error, vb.moment_form.value, vb.moment_form.valid});
    plot.push_back({"bound_Cp", p, vb.moment_form.value, 0.0, vb.moment_form.value, vb.moment_form.valid});
    plot.push_back({"bound_16", p, vb.akv_form.value, 0.0, vb.akv_form.value, true});

    if (v.variance > vb.moment_form.value) {
      cp_ok = false;
      cp_detail += "p=" + fmt(p) + " ";
    }
    if (v.variance > vb.akv_form.value + 3.0 * v.std_error) {
      akv_ok = false;
      akv_detail += "p=" + fmt(p) + " ";
    }
    if (!vplus.empty()) {
      const Stats vs = stats_of(vplus);
      row.insert(row.end(), {real(vs.mean), real(vs.std_error), real(vs.max)});
      vplot.push_back({"vplus_mean", p, vs.mean, vs.std_error, 4.0, true});
      vplot.push_back({"var_hat", p, v.variance, v.std_error, vs.mean, true});
      if (v.variance > vs.mean + 3.0 * std::hypot(v.std_error, vs.std_error)) {
        es_ok = false;
        es_detail += "p=" + fmt(p) + " ";
      }
      if (vs.max > 4.0) {
        four_ok = false;
        four_detail += "p=" + fmt(p) + " max=" + fmt(vs.max) + " ";
      }
    } else {
      row.insert(row.end(), {Cell{}, Cell{}, Cell{}});
    }
    report.rows.push_back(std::move(row));
  }
  add_check(report, "var_hat <= 966306 p", cp_ok, cp_detail);
  add_check(report, "var_hat <= 16 + 3 se", akv_ok, akv_detail);
  if (vplus_reps) {
    add_check(report, "var_hat <= mean V+ + 3 se", es_ok, es_detail);
    add_check(report, "V+ <= 4 on every table", four_ok, four_detail);
  }
}

std::vector<double> sup_grid(double p_lo, std::size_t points) {
  std::set<double> grid;
  for (std::size_t k = 0; k < points; ++k) {
    grid.insert(static_cast<double>(k) / static_cast<double>(points - 1));
  }
  for (double d = 1e-4; d < 1.0; d *= 10.0) grid.insert(d);
  if (p_lo >= 0.0 && p_lo <= 1.0) grid.insert(p_lo);
  return {grid.begin(), grid.end()};
}

void run_sup_process(const ExperimentConfig& c, Report& report) {
  report.columns = {"seed", "n", "replicate", "p_lo", "p_hi", "sup_deviation", "bound", "bound_valid"};
  auto& plot = report.plots["sup_process"];
  const std::size_t curve_reps = c.curve_replicates ? c.curve_replicates : c.replicates;
  std::vector<std::pair<std::size_t, double>> means;
  bool below_bound = true;
  for (const std::size_t n : c.n_values) {
    const double nd = static_cast<double>(n);
    const double p_lo = c.p_range == "full" ? 0.0 : 64.0 * std::log(nd) / nd;
    const double p_hi = 1.0;
    const std::uint64_t base = replicate_seed(c.seed, n);
    if (p_lo > p_hi) {
      add_check(report, "p range nonempty for n=" + std::to_string(n), false,
                "64 log n / n = " + fmt(p_lo) + " exceeds 1");
      report.rows.push_back({u64(base), u64(n), Cell{}, real(p_lo), real(p_hi), Cell{},
                             real(constants::kUniformC), flag(false)});
      continue;
    }
    const std::vector<double> grid = sup_grid(p_lo, c.curve_points);
    const auto curve_runs = collect<ReplicateResult>(
        curve_reps, 0, base, c.threads, report,
        [&](std::size_t, std::uint64_t s) { return run_replicate(n, grid, s, solver_of(c)); });
    require_replicates(report, curve_runs.size(), 2);
    const MeanCurve curve = summarize_curve(grid, curve_runs);

    struct Sup {
      std::size_t index;
      std::uint64_t seed;
      double value;
    };
    const auto sups = collect<Sup>(
        c.replicates, curve_reps, base, c.threads, report, [&](std::size_t r, std::uint64_t s) {
          return Sup{r, s, sup_deviation_path(new_process(n, s), curve, p_lo, p_hi, solver_of(c))};
        });
    std::vector<double> values;
    for (const Sup& s : sups) {
      values.push_back(s.value);
      report.rows.push_back({u64(s.seed), u64(n), u64(s.index - curve_reps), real(p_lo), real(p_hi),
                             real(s.value), real(constants::kUniformC), flag(true)});
      plot.push_back({"sup_n" + std::to_string(n), static_cast<double>(s.index - curve_reps), s.value,
                      0.0, constants::kUniformC, true});
      below_bound = below_bound && s.value <= constants::kUniformC;
    }
    const Stats st = stats_of(values);
    plot.push_back({"mean_sup", nd, st.mean, st.std_error, constants::kUniformC, true});
    means.emplace_back(n, st.mean);
  }
  add_check(report, "sup deviation <= 5e8", below_bound, "");
  if (means.size() >= 2) {
    const double ratio = means.back().second / means.front().second;
    add_check(report, "mean sup growth from smallest to largest n <= 1.5", ratio <= 1.5,
              "ratio " + fmt(ratio), false);
  }
}

void run_deloc_audit(const ExperimentConfig& c, Report& report) {
  const std::size_t n = c.n_values[0];
  const double nd = static_cast<double>(n);
  const auto results = collect<ReplicateResult>(
      c.replicates, 0, c.seed, c.threads, report,
      [&](std::size_t, std::uint64_t s) { return run_replicate(n, c.p_grid, s, solver_of(c)); });
  require_replicates(report, results.size(), 1);

  report.columns = {"seed", "n", "p", "lambda", "linf_scaled", "l2_dev", "alignment",
                    "weak_bound", "weak_valid", "l2_bound", "l2_valid"};
  auto& plot = report.plots["deloc"];
  double worst = 0.0;
  bool l2_ok = true;
  for (std::size_t k = 0; k < c.p_grid.size(); ++k) {
    const double p = c.p_grid[k];
    const BoundValue weak = weak_deloc(nd, p);
    const double q = c.q.value_or(p);
    const BoundValue l2 = q > 0.0 ? unif_deloc_bound(nd, q) : BoundValue{};
    std::vector<double> linf, dev;
    for (const ReplicateResult& r : results) {
      const DelocStats& d = r.deloc[k];
      report.rows.push_back({u64(r.seed), u64(n), real(p), real(r.lambdas[k]), real(d.linf_scaled),
                             real(d.l2_dev), real(d.alignment), real(weak.value), flag(weak.valid),
                             q > 0.0 ? real(l2.value) : Cell{}, flag(q > 0.0 && l2.valid)});
      linf.push_back(d.linf_scaled);
      dev.push_back(d.l2_dev);
      worst = std::max(worst, d.linf_scaled);
      if (q > 0.0 && l2.valid && d.l2_dev > l2.value) l2_ok = false;
    }
    const Stats ls = stats_of(linf), ds = stats_of(dev);
    plot.push_back({"linf_scaled_mean", p, ls.mean, ls.std_error, weak.value * std::sqrt(nd), weak.valid});
    plot.push_back({"linf_scaled_max", p, ls.max, 0.0, weak.value * std::sqrt(nd), weak.valid});
    plot.push_back({"l2_dev_mean", p, ds.mean, ds.std_error, q > 0.0 ? l2.value : 0.0,
                    q > 0.0 && l2.valid});
  }
  add_check(report, "sqrt(n) ||v||_inf <= 11 on every replicate", worst <= constants::kWeakDeloc,
            "max " + fmt(worst));
  if (c.linf_threshold) {
    add_check(report, "sqrt(n) ||v||_inf <= " + fmt(*c.linf_threshold) + " on every replicate",
              worst <= *c.linf_threshold, "max " + fmt(worst));
  }
  add_check(report, "||v - 1/sqrt n|| <= 2896/sqrt(nq) where valid", l2_ok, "");
}

void run_moments(const ExperimentConfig& c, Report& report) {
  const std::size_t n = c.n_values[0];
  const double nd = static_cast<double>(n);
  const auto results = collect<ReplicateResult>(
      c.replicates, 0, c.seed, c.threads, report,
      [&](std::size_t, std::uint64_t s) { return run_replicate(n, c.p_grid, s, solver_of(c)); });
  require_replicates(report, results.size(), 2);

  report.columns = {"seed", "n", "p", "quantity", "k_or_t", "side", "estimate", "std_error",
                    "bound", "valid"};
  auto& mplot = report.plots["moments"];
  auto& tplot = report.plots["tail"];
  bool moment_ok = true, tail_ok = true;
  std::string tail_detail;
  for (std::size_t g = 0; g < c.p_grid.size(); ++g) {
    const double p = c.p_grid[g];
    std::vector<double> xs;
    for (const auto& r : results) xs.push_back(r.lambdas[g]);
    const double center = stats_of(xs).mean;
    const bool has_range = p > 0.0 && p < 1.0 && nd * p > 1.0;
    const MomentRange range = has_range ? moment_k_max(nd, p) : MomentRange{0.0, 0.0, true, true};
    for (const double k : c.k_values) {
      for (const TailSide side : {TailSide::upper, TailSide::lower}) {
        const bool upper = side == TailSide::upper;
        const double est = moment_estimate(xs, center, k, side);
        // The moment bound is stated for k > 2 and p > 0 only.
        const bool defined = k > 2.0 && p > 0.0;
        const BoundValue b = defined ? moment_bound(k, p, side) : BoundValue{0.0, false, {}, ""};
        const bool in_range = upper ? !range.upper_empty && k <= range.upper_tail_k_max
                                    : !range.lower_empty && k <= range.lower_tail_k_max;
        const bool valid = defined && b.valid && in_range;
        report.rows.push_back({u64(c.seed), u64(n), real(p), text("moment"), real(k),
                               text(upper ? "upper" : "lower"), real(est), Cell{},
                               defined ? real(b.value) : Cell{}, flag(valid)});
        mplot.push_back({std::string(upper ? "upper" : "lower") + "_p" + fmt(p), k, est, 0.0,
                         b.value, valid});
        if (defined && est > b.value) moment_ok = false;
      }
    }
    const auto survival = empirical_tail(xs, center, c.t_grid);
    for (std::size_t i = 0; i < c.t_grid.size(); ++i) {
      const double t = c.t_grid[i];
      const double se = frequency_se(survival[i], xs.size());
      const BoundValue akv = akv_tail(t);
      const BoundValue conc =
          p > 0.0 && t > 0.0 ? concentration_tail(nd, p, t) : BoundValue{1.0, false, {}, ""};
      report.rows.push_back({u64(c.seed), u64(n), real(p), text("tail_akv"), real(t), text("both"),
                             real(survival[i]), real(se), real(akv.value), flag(akv.valid)});
      report.rows.push_back({u64(c.seed), u64(n), real(p), text("tail_concentration"), real(t),
                             text("both"), real(survival[i]), real(se), real(conc.value),
                             flag(conc.valid)});
      tplot.push_back({"survival_p" + fmt(p), t, survival[i], se, akv.value, akv.valid});
      if (survival[i] > akv.value + 3.0 * se) {
        tail_ok = false;
        tail_detail += "p=" + fmt(p) + " t=" + fmt(t) + " ";
      }
    }
  }
  add_check(report, "moment estimates <= sqrt(C k p)", moment_ok, "");
  add_check(report, "empirical tail <= min(1, 2 exp(-t^2/32)) + 3 se", tail_ok, tail_detail);
}

void run_dkw(const ExperimentConfig& c, Report& report) {
  const std::size_t n = c.n_values[0];
  const double nd = static_cast<double>(n);
  const auto stats = collect<std::pair<std::uint64_t, double>>(
      c.replicates, 0, c.seed, c.threads, report, [&](std::size_t, std::uint64_t s) {
        return std::pair{s, dkw_statistic(new_process(n, s))};
      });
  require_replicates(report, stats.size(), 2);

  report.columns = {"seed", "n", "quantity", "eps", "value", "std_error", "bound", "valid"};
  std::vector<double> values;
  for (const auto& [s, v] : stats) {
    values.push_back(v);
    report.rows.push_back({u64(s), u64(n), text("statistic"), Cell{}, real(v), Cell{}, Cell{}, Cell{}});
  }
  const Stats st = stats_of(values);
  const double ref = dkw_expected_sup();
  report.rows.push_back({u64(c.seed), u64(n), text("mean"), Cell{}, real(st.mean), real(st.std_error),
                         real(ref), flag(true)});
  auto& plot = report.plots["dkw"];
  plot.push_back({"mean", nd, st.mean, st.std_error, ref, true});
  add_check(report, "mean statistic <= sqrt(2 pi)", st.mean <= ref, "mean " + fmt(st.mean));

  const double m = static_cast<double>(pair_count(n));
  bool tail_ok = true;
  std::string detail;
  for (const double eps : c.eps_grid) {
    const double threshold = (nd - 1.0) * eps;
    const double freq =
        static_cast<double>(std::count_if(values.begin(), values.end(),
                                          [&](double v) { return v >= threshold; })) /
        static_cast<double>(values.size());
    const double se = frequency_se(freq, values.size());
    const BoundValue b = dkw_tail(m, eps);
    report.rows.push_back({u64(c.seed), u64(n), text("tail"), real(eps), real(freq), real(se),
                           real(b.value), flag(b.valid)});
    plot.push_back({"tail", eps, freq, se, b.value, b.valid});
    if (freq > b.value + 3.0 * se) {
      tail_ok = false;
      detail += "eps=" + fmt(eps) + " ";
    }
  }
  add_check(report, "P{statistic >= (n-1) eps} <= 2 exp(-n(n-1) eps^2) + 3 se", tail_ok, detail);
}

void run_sparse_regime(const ExperimentConfig& c, Report& report) {
  const std::size_t n = c.n_values[0];
  const double nd = static_cast<double>(n);
  struct Sample {
    std::vector<double> lambdas;
    std::vector<bool> forest;
    std::vector<std::map<std::size_t, std::size_t>> census;
    bool cap_ok = true;
  };
  const auto samples = collect<Sample>(
      c.replicates, 0, c.seed, c.threads, report, [&](std::size_t, std::uint64_t s) {
        Sample out;
        const EdgeWeightTable table = new_process(n, s);
        for (const double p : c.p_grid) {
          const GraphSnapshot g = snapshot(table, p);
          const ComponentSummary summary = analyze(g);
          double lambda = top_eigenpair(g, solver_of(c)).value;
          if (summary.is_forest) {
            if (n <= kDenseOracleMaxN) lambda = dense_spectrum_oracle(g).front();
            out.cap_ok = out.cap_ok && lambda <= forest_lambda_cap(summary) + 1e-9;
          }
          out.lambdas.push_back(lambda);
          out.forest.push_back(summary.is_forest);
          out.census.push_back(summary.tree_census);
        }
        return out;
      });
  require_replicates(report, samples.size(), 2);

  report.columns = {"seed", "n", "p", "c", "replicates", "lambda_mean", "lambda_var",
                    "lambda_var_se", "forest_freq", "forest_freq_se", "non_forest_bound",
                    "non_forest_valid"};
  for (const long k : c.tree_sizes) {
    const std::string s = "tree" + std::to_string(k);
    report.columns.insert(report.columns.end(), {s + "_mean", s + "_se", s + "_bound"});
  }
  auto& plot = report.plots["sparse"];
  bool forest_ok = true, census_ok = true, cap_ok = true;
  std::string forest_detail, census_detail;
  for (const Sample& s : samples) cap_ok = cap_ok && s.cap_ok;
  for (std::size_t g = 0; g < c.p_grid.size(); ++g) {
    const double p = c.p_grid[g];
    std::vector<double> lambdas;
    double forests = 0.0;
    for (const Sample& s : samples) {
      lambdas.push_back(s.lambdas[g]);
      forests += s.forest[g] ? 1.0 : 0.0;
    }
    const double freq = forests / static_cast<double>(samples.size());
    const double freq_se = frequency_se(freq, samples.size());
    const SampleVariance v = sample_variance(lambdas);
    const Stats ls = stats_of(lambdas);
    const BoundValue nf = tree_bounds(nd, 2, p).non_forest;
    std::vector<Cell> row = {u64(c.seed), u64(n), real(p), real(nd * p), u64(samples.size()),
                             real(ls.mean), real(v.variance), real(v.std_error), real(freq),
                             real(freq_se), real(nf.value), flag(nf.valid)};
    plot.push_back({"forest_freq", p, freq, freq_se, 1.0 - std::min(1.0, nf.value), nf.valid});
    plot.push_back({"lambda_var", p, v.variance, v.std_error, 0.0, true});
    if (nf.valid && freq < 1.0 - nf.value - 3.0 * freq_se) {
      forest_ok = false;
      forest_detail += "p=" + fmt(p) + " ";
    }
    for (const long k : c.tree_sizes) {
      std::vector<double> counts;
      for (const Sample& s : samples) {
        const auto it = s.census[g].find(static_cast<std::size_t>(k));
        counts.push_back(it == s.census[g].end() ? 0.0 : static_cast<double>(it->second));
      }
      const Stats ts = stats_of(counts);
      const double bound = k >= 2 ? tree_bounds(nd, k, p).expected_trees.value : nd;
      row.insert(row.end(), {real(ts.mean), real(ts.std_error), real(bound)});
      plot.push_back({"tree" + std::to_string(k), p, ts.mean, ts.std_error, bound, true});
      if (ts.mean > bound + 3.0 * ts.std_error) {
        census_ok = false;
        census_detail += "p=" + fmt(p) + " k=" + std::to_string(k) + " ";
      }
    }
    report.rows.push_back(std::move(row));
  }
  add_check(report, "forest frequency >= 1 - c^3/(1-c) - 3 se", forest_ok, forest_detail);
  add_check(report, "tree census means <= Cayley bounds + 3 se", census_ok, census_detail);
  add_check(report, "forest_lambda_cap >= lambda on every forest", cap_ok, "");
}

void run_bounds_table(const ExperimentConfig& c, Report& report) {
  report.columns = {"seed", "evaluator", "n", "p", "q", "k", "t", "value", "valid", "probability"};
  auto& plot = report.plots["bounds"];
  auto add = [&](const std::string& name, std::optional<double> n, std::optional<double> p,
                 std::optional<double> q, std::optional<double> k, std::optional<double> t,
                 const BoundValue& b) {
    report.rows.push_back({u64(c.seed), text(name), maybe(n), maybe(p), maybe(q), maybe(k), maybe(t),
                           real(b.value), flag(b.valid), maybe(b.probability)});
    const double x = p ? *p : (t ? *t : (k ? *k : (n ? *n : 0.0)));
    plot.push_back({name, x, b.value, 0.0, b.value, b.valid});
  };
  auto plain = [](double v) { return BoundValue{v, true, std::nullopt, ""}; };
  for (const std::size_t n_int : c.n_values) {
    const double n = static_cast<double>(n_int);
    for (const double t : {1.0, 5.0, 10.0, 20.0}) add("akv_tail", {}, {}, {}, {}, t, akv_tail(t));
    for (const double t : {1e9, 2e9}) add("uniform_tail", {}, {}, {}, {}, t, uniform_tail(t));
    add("basic_sparse_norm", n, {}, {}, {}, {}, basic_sparse_norm(n));
    const LogLogBound ll = loglog_bound(n);
    add("loglog_proof_form", n, {}, {}, {}, {}, ll.proof_form);
    add("loglog_intro_form", n, {}, {}, {}, {}, ll.intro_form);
    add("dkw_expected_sup", {}, {}, {}, {}, {}, plain(dkw_expected_sup()));
    for (const double x : {0.5, 1.0, 2.0}) {
      const double eps = x / (n - 1.0);
      add("dkw_tail", n, {}, {}, {}, eps, dkw_tail(static_cast<double>(pair_count(n_int)), eps));
    }
    for (const long k : {2L, 3L, 4L, 5L}) {
      add("forest_spectral_bound", {}, {}, {}, static_cast<double>(k), {},
          plain(forest_spectral_bound(k)));
      add("sparse_threshold", n, {}, {}, static_cast<double>(k), {}, plain(sparse_threshold(n, k)));
    }
    for (const double p : c.p_grid) {
      const double q = c.q.value_or(p > 0.0 ? p : 1e-3);
      const BvhNorm bvh = bvh_expected_norm(n, p);
      add("bvh_full", n, p, {}, {}, {}, bvh.full);
      add("bvh_simplified", n, p, {}, {}, {}, bvh.simplified);
      add("centered_uniform_bound", n, {}, q, {}, {}, centered_uniform_bound(n, q));
      const LambdaBracket br = lambda_bracket(n, p, q);
      add("lambda_lower", n, p, q, {}, {}, br.lower);
      add("lambda_upper", n, p, q, {}, {}, br.upper);
      add("unif_deloc_bound", n, {}, q, {}, {}, unif_deloc_bound(n, q));
      add("weak_deloc", n, p, {}, {}, {}, weak_deloc(n, p));
      if (p > 0.0 && p < 1.0 && n * p > 1.0) {
        const MomentRange mr = moment_k_max(n, p);
        add("moment_k_max_upper", n, p, {}, {}, {}, BoundValue{mr.upper_tail_k_max, !mr.upper_empty, {}, ""});
        add("moment_k_max_lower", n, p, {}, {}, {}, BoundValue{mr.lower_tail_k_max, !mr.lower_empty, {}, ""});
      }
      if (p == 0.0) continue;
      for (const double k : {3.0, 4.0}) {
        add("moment_bound_upper", {}, p, {}, k, {}, moment_bound(k, p, TailSide::upper));
        add("moment_bound_lower", {}, p, {}, k, {}, moment_bound(k, p, TailSide::lower));
      }
      const VarianceBound vb = variance_bound(p, n);
      add("variance_moment_form", n, p, {}, {}, {}, vb.moment_form);
      add("variance_akv_form", n, p, {}, {}, {}, vb.akv_form);
      const double t_max = concentration_t_max(n, p);
      add("concentration_t_max", n, p, {}, {}, {}, plain(t_max));
      const double t = std::isfinite(t_max) ? 0.5 * t_max : 1.0;
      if (t > 0.0) add("concentration_tail", n, p, {}, {}, t, concentration_tail(n, p, t));
      add("degree_band", n, p, {}, {}, 0.1, degree_band(n, p, 0.1));
      for (const long k : {2L, 3L}) {
        const TreeBounds tb = tree_bounds(n, k, p);
        add("tree_expected", n, p, {}, static_cast<double>(k), {}, tb.expected_trees);
        add("tree_large_series", n, p, {}, static_cast<double>(k), {}, tb.large_tree_series);
        add("tree_non_forest", n, p, {}, static_cast<double>(k), {}, tb.non_forest);
      }
    }
  }
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (const auto& [k, n] : kKindNames) {
    if (name == n) return k;
  }
  throw ConfigError("unknown experiment '" + name + "'");
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& item : j.items()) {
    if (!kConfigKeys.count(item.key())) throw ConfigError("unknown config field '" + item.key() + "'");
  }
  ExperimentConfig c;
  if (!j.contains("experiment")) throw ConfigError("config field 'experiment' is required");
  c.experiment = parse_experiment_kind(get_field<std::string>(j, "experiment"));
  if (j.contains("n")) {
    if (j["n"].is_array()) {
      c.n_values = get_field<std::vector<std::size_t>>(j, "n");
    } else {
      c.n_values = {get_field<std::size_t>(j, "n")};
    }
  }
  read_if(j, "n_values", c.n_values);
  if (j.contains("p")) c.p_grid = {get_field<double>(j, "p")};
  read_if(j, "p_grid", c.p_grid);
  if (j.contains("q")) c.q = get_field<double>(j, "q");
  read_if(j, "replicates", c.replicates);
  read_if(j, "seed", c.seed);
  read_if(j, "threads", c.threads);
  read_if(j, "tol", c.tol);
  read_if(j, "max_iter", c.max_iter);
  if (j.contains("solver")) {
    const json& s = j["solver"];
    if (!s.is_object()) throw ConfigError("config field 'solver' must be an object");
    for (const auto& item : s.items()) {
      if (item.key() != "tol" && item.key() != "max_iter") {
        throw ConfigError("unknown solver field '" + item.key() + "'");
      }
    }
    read_if(s, "tol", c.tol);
    read_if(s, "max_iter", c.max_iter);
  }
  read_if(j, "out", c.out);
  read_if(j, "vplus_edges", c.vplus_edges);
  read_if(j, "vplus_inner", c.vplus_inner);
  read_if(j, "vplus_replicates", c.vplus_replicates);
  read_if(j, "p_range", c.p_range);
  read_if(j, "curve_replicates", c.curve_replicates);
  read_if(j, "curve_points", c.curve_points);
  read_if(j, "k_values", c.k_values);
  read_if(j, "t_grid", c.t_grid);
  read_if(j, "eps_grid", c.eps_grid);
  if (j.contains("linf_threshold")) c.linf_threshold = get_field<double>(j, "linf_threshold");
  read_if(j, "tree_sizes", c.tree_sizes);
  return c;
}

namespace {

// Fills experiment-specific defaults for every field left empty.
ExperimentConfig resolved(ExperimentConfig c) {
  using K = ExperimentKind;
  if (c.n_values.empty()) {
    if (c.experiment == K::sup_process) {
      c.n_values = {128, 256, 512};
    } else {
      c.n_values = {c.experiment == K::sparse_regime ? 500u : 1000u};
    }
  }
  if (c.p_grid.empty()) {
    switch (c.experiment) {
      case K::mean_curve:
        for (int k = 0; k <= 10; ++k) c.p_grid.push_back(k / 10.0);
        break;
      case K::variance_sweep:
        c.p_grid = {0.1, 0.2, 0.4, 0.8};
        break;
      case K::deloc_audit:
        c.p_grid = {0.05, 0.1, 0.5};
        break;
      case K::moments:
        c.p_grid = {0.5};
        break;
      case K::sparse_regime: {
        const double n = static_cast<double>(c.n_values[0]);
        c.p_grid = {std::pow(n, -2.0), std::pow(n, -1.5)};
        break;
      }
      case K::bounds_table:
        c.p_grid = {0.01, 0.1, 0.5};
        break;
      default:
        break;
    }
  }
  if (c.experiment == K::variance_sweep && c.vplus_edges && !c.vplus_replicates) {
    c.vplus_replicates = c.replicates;
  }
  if (c.experiment == K::moments && c.t_grid.empty()) {
    for (int k = 1; k <= 20; ++k) c.t_grid.push_back(0.5 * k);
  }
  if (c.experiment == K::dkw && c.eps_grid.empty()) {
    const double n = static_cast<double>(c.n_values[0]);
    for (int k = 1; k <= 20; ++k) c.eps_grid.push_back(0.1 * k / (n - 1.0));
  }
  return c;
}

}  // namespace

void ExperimentConfig::validate() const {
  using K = ExperimentKind;
  if (n_values.empty()) throw ConfigError("n is required");
  if (experiment != K::sup_process && experiment != K::bounds_table && n_values.size() != 1) {
    throw ConfigError(to_string(experiment) + " takes a single n");
  }
  for (const std::size_t n : n_values) {
    if (n < 1) throw ConfigError("n must be >= 1");
    if ((experiment == K::dkw || experiment == K::sup_process || experiment == K::bounds_table) && n < 3) {
      throw ConfigError(to_string(experiment) + " needs n >= 3");
    }
  }
  if (experiment != K::sup_process && experiment != K::dkw && p_grid.empty()) {
    throw ConfigError("p or p_grid is required");
  }
  for (std::size_t k = 0; k < p_grid.size(); ++k) {
    if (!(p_grid[k] >= 0.0 && p_grid[k] <= 1.0)) throw ConfigError("p values must lie in [0,1]");
    if (k > 0 && !(p_grid[k] > p_grid[k - 1])) throw ConfigError("p_grid must be strictly increasing");
  }
  if (q && !(*q > 0.0 && *q <= 1.0)) throw ConfigError("q must lie in (0,1]");
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (experiment != K::bounds_table && experiment != K::deloc_audit && replicates < 2) {
    throw ConfigError("replicates must be >= 2");
  }
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (!(tol > 0.0 && tol < 1.0)) throw ConfigError("tol must lie in (0,1)");
  if (vplus_edges > pair_count(n_values[0])) throw ConfigError("vplus_edges exceeds n(n-1)/2");
  if (vplus_inner < 1) throw ConfigError("vplus_inner must be >= 1");
  if (vplus_replicates > replicates) throw ConfigError("vplus_replicates exceeds replicates");
  if (p_range != "theorem" && p_range != "full") throw ConfigError("p_range must be 'theorem' or 'full'");
  if (curve_points < 2) throw ConfigError("curve_points must be >= 2");
  if (experiment == K::sup_process && curve_replicates == 1) {
    throw ConfigError("curve_replicates must be >= 2");
  }
  for (const double k : k_values) {
    if (!(k >= 1.0)) throw ConfigError("k_values must be >= 1");
  }
  for (const double t : t_grid) {
    if (!(t >= 0.0)) throw ConfigError("t_grid values must be >= 0");
  }
  for (const double e : eps_grid) {
    if (!(e > 0.0)) throw ConfigError("eps_grid values must be > 0");
  }
  for (const long k : tree_sizes) {
    if (k < 1) throw ConfigError("tree_sizes must be >= 1");
  }
}

json ExperimentConfig::echo() const {
  json j;
  j["experiment"] = to_string(experiment);
  j["n_values"] = n_values;
  j["p_grid"] = p_grid;
  j["q"] = q ? json(*q) : json(nullptr);
  j["replicates"] = replicates;
  j["seed"] = seed;
  j["solver"] = {{"tol", tol}, {"max_iter", max_iter}};
  switch (experiment) {
    case ExperimentKind::variance_sweep:
      j["vplus_edges"] = vplus_edges;
      j["vplus_inner"] = vplus_inner;
      j["vplus_replicates"] = vplus_replicates;
      break;
    case ExperimentKind::sup_process:
      j["p_range"] = p_range;
      j["curve_replicates"] = curve_replicates ? curve_replicates : replicates;
      j["curve_points"] = curve_points;
      break;
    case ExperimentKind::moments:
      j["k_values"] = k_values;
      j["t_grid"] = t_grid;
      break;
    case ExperimentKind::dkw:
      j["eps_grid"] = eps_grid;
      break;
    case ExperimentKind::deloc_audit:
      j["linf_threshold"] = linf_threshold ? json(*linf_threshold) : json(nullptr);
      break;
    case ExperimentKind::sparse_regime:
      j["tree_sizes"] = tree_sizes;
      break;
    default:
      break;
  }
  return j;
}

bool Report::checks_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed || !c.hard; });
}

int Report::exit_code() const {
  if (!checks_passed()) return 2;
  if (!failures.empty()) return 3;
  return 0;
}

Report run(const ExperimentConfig& input) {
  const ExperimentConfig c = resolved(input);
  c.validate();
  const auto start = std::chrono::steady_clock::now();
  Report report;
  report.experiment = to_string(c.experiment);
  report.config = c.echo();
  switch (c.experiment) {
    case ExperimentKind::mean_curve: run_mean_curve(c, report); break;
    case ExperimentKind::variance_sweep: run_variance_sweep(c, report); break;
    case ExperimentKind::sup_process: run_sup_process(c, report); break;
    case ExperimentKind::deloc_audit: run_deloc_audit(c, report); break;
    case ExperimentKind::moments: run_moments(c, report); break;
    case ExperimentKind::dkw: run_dkw(c, report); break;
    case ExperimentKind::sparse_regime: run_sparse_regime(c, report); break;
    case ExperimentKind::bounds_table: run_bounds_table(c, report); break;
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string format_cell(const Cell& cell) {
  struct Visitor {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(double x) const {
      if (std::isnan(x)) return "nan";
      if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", x);
      return buf;
    }
    std::string operator()(std::int64_t x) const { return std::to_string(x); }
    std::string operator()(std::uint64_t x) const { return std::to_string(x); }
    std::string operator()(bool x) const { return x ? "true" : "false"; }
    std::string operator()(const std::string& s) const {
      if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
      std::string out = "\"";
      for (const char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
      }
      return out + "\"";
    }
  };
  return std::visit(Visitor{}, cell);
}

namespace {

std::string csv_line(const std::vector<Cell>& cells) {
  std::string line;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) line += ',';
    line += format_cell(cells[k]);
  }
  return line + '\n';
}

json cell_json(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> json {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<V, double>) {
          return std::isfinite(v) ? json(v) : json(format_cell(Cell{v}));
        } else {
          return v;
        }
      },
      cell);
}

}  // namespace

std::string to_csv(const Report& report) {
  std::vector<Cell> header;
  for (const auto& c : report.columns) header.push_back(Cell{c});
  std::string out = csv_line(header);
  for (const auto& row : report.rows) out += csv_line(row);
  return out;
}

json to_json(const Report& report) {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["experiment"] = report.experiment;
  j["config"] = report.config;
  j["columns"] = report.columns;
  json rows = json::array();
  for (const auto& row : report.rows) {
    json r = json::array();
    for (const auto& cell : row) r.push_back(cell_json(cell));
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  json checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"hard", c.hard}, {"detail", c.detail}});
  }
  j["checks"] = std::move(checks);
  json failures = json::array();
  for (const auto& f : report.failures) {
    failures.push_back({{"seed", f.seed}, {"replicate", f.index}, {"message", f.message}});
  }
  j["failures"] = std::move(failures);
  json plots = json::object();
  for (const auto& [kind, points] : report.plots) {
    json list = json::array();
    for (const auto& p : points) {
      list.push_back({{"series", p.series}, {"x", cell_json(Cell{p.x})}, {"y", cell_json(Cell{p.y})},
                      {"y_err", cell_json(Cell{p.y_err})}, {"bound", cell_json(Cell{p.bound})},
                      {"valid", p.valid}});
    }
    plots[kind] = std::move(list);
  }
  j["plots"] = std::move(plots);
  j["passed"] = report.checks_passed();
  j["exit_code"] = report.exit_code();
  return j;
}

void write_report(const Report& report, const std::filesystem::path& prefix, std::size_t threads) {
  if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
  auto write = [](const std::filesystem::path& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << body;
  };
  write(prefix.string() + ".csv", to_csv(report));
  write(prefix.string() + ".json", to_json(report).dump(2) + "\n");
  json timing = {{"wall_seconds", report.wall_seconds}, {"threads", threads}};
  write(prefix.string() + ".timing.json", timing.dump(2) + "\n");
}

std::vector<std::string> plot_kinds(const json& report) {
  std::vector<std::string> out;
  if (report.contains("plots")) {
    for (const auto& item : report["plots"].items()) out.push_back(item.key());
  }
  return out;
}

std::string emit_plot_data(const json& report, const std::string& kind) {
  if (!report.contains("plots") || !report["plots"].contains(kind)) {
    std::string known;
    for (const auto& k : plot_kinds(report)) known += (known.empty() ? "" : ", ") + k;
    throw ConfigError("report has no plot series of kind '" + kind + "' (available: " +
                      (known.empty() ? "none" : known) + ")");
  }
  auto number = [](const json& v) -> Cell {
    if (v.is_number()) return Cell{v.get<double>()};
    if (v.is_string()) return Cell{v.get<std::string>()};
    return Cell{};
  };
  std::string out = "series,x,y,y_err,bound,valid\n";
  for (const auto& p : report["plots"][kind]) {
    out += csv_line({Cell{p.at("series").get<std::string>()}, number(p.at("x")), number(p.at("y")),
                     number(p.at("y_err")), number(p.at("bound")), Cell{p.at("valid").get<bool>()}});
  }
  return out;
}

}  // namespace speclab
