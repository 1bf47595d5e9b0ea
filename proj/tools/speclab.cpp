// speclab: batch runner for the random-graph spectral experiments.
//
//   speclab run <config.json> [--n N] [--p P] [--replicates R] [--seed S]
//                             [--out PREFIX] [--threads T] [--tol TOL]
//   speclab bounds-table [--n N] [--p P] [--out PREFIX]
//   speclab plot-data <report.json> --kind K [--out FILE]
//
// Exit status: 0 pass, 1 usage error, 2 a hard check failed, 3 internal or
// solver error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "speclab/errors.hpp"
#include "speclab/experiments.hpp"
#include "speclab/parallel.hpp"

namespace {

constexpr int kUsage = 1;
constexpr int kInternal = 3;

struct Overrides {
  std::optional<std::size_t> n;
  std::optional<double> p;
  std::optional<std::size_t> replicates;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> threads;
  std::optional<double> tol;

  void attach(CLI::App* app, bool all) {
    app->add_option("--n", n, "number of vertices");
    app->add_option("--p", p, "edge probability (replaces the p grid)");
    app->add_option("--out", out, "output prefix");
    if (!all) return;
    app->add_option("--replicates", replicates, "Monte Carlo replicates");
    app->add_option("--seed", seed, "base seed");
    app->add_option("--threads", threads, "worker threads (default: SPECLAB_THREADS or 1)");
    app->add_option("--tol", tol, "eigensolver tolerance");
  }

  void apply(speclab::ExperimentConfig& c) const {
    if (n) c.n_values = {*n};
    if (p) c.p_grid = {*p};
    if (replicates) c.replicates = *replicates;
    if (seed) c.seed = *seed;
    if (out) c.out = *out;
    if (threads) c.threads = *threads;
    if (tol) c.tol = *tol;
  }
};

int execute(speclab::ExperimentConfig config) {
  const speclab::Report report = speclab::run(config);
  speclab::write_report(report, config.out, config.threads);
  for (const auto& check : report.checks) {
    std::cout << (check.passed ? "PASS " : (check.hard ? "FAIL " : "WARN ")) << check.name;
    if (!check.detail.empty()) std::cout << "  (" << check.detail << ")";
    std::cout << "\n";
  }
  for (const auto& f : report.failures) {
    std::cerr << "replicate " << f.index << " (seed " << f.seed << ") failed: " << f.message << "\n";
  }
  std::cout << "wrote " << config.out << ".csv, " << config.out << ".json (" << report.wall_seconds
            << " s)\n";
  return report.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral norm experiments on the coupled Erdos-Renyi process"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides run_flags;
  auto* run_cmd = app.add_subcommand("run", "run the experiment described by a JSON config");
  run_cmd->add_option("config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run_flags.attach(run_cmd, true);

  Overrides table_flags;
  auto* table_cmd = app.add_subcommand("bounds-table", "evaluate every closed-form bound at pinned inputs");
  table_flags.attach(table_cmd, false);

  std::string report_path, kind, plot_out;
  auto* plot_cmd = app.add_subcommand("plot-data", "long-format plot data from a JSON report");
  plot_cmd->add_option("report", report_path, "report JSON")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("--kind", kind, "series kind")->required();
  plot_cmd->add_option("--out", plot_out, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*run_cmd) {
      nlohmann::json j;
      try {
        std::ifstream in(config_path);
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw speclab::ConfigError(std::string("cannot parse config: ") + e.what());
      }
      if (!j.contains("threads")) j["threads"] = speclab::default_thread_count();
      auto config = speclab::ExperimentConfig::from_json(j);
      run_flags.apply(config);
      return execute(std::move(config));
    }
    if (*table_cmd) {
      speclab::ExperimentConfig config;
      config.experiment = speclab::ExperimentKind::bounds_table;
      config.n_values = {1000};
      config.out = "bounds_table";
      table_flags.apply(config);
      return execute(std::move(config));
    }
    std::ifstream in(report_path);
    const auto report = nlohmann::json::parse(in);
    const std::string data = speclab::emit_plot_data(report, kind);
    if (plot_out.empty()) {
      std::cout << data;
    } else {
      std::ofstream(plot_out, std::ios::binary) << data;
    }
    return 0;
  } catch (const speclab::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const speclab::InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
}
