#pragma once

// Batch experiments: a JSON config in, a Report out. Reports serialize to an
// RFC-4180 CSV (one row per result, each carrying its seed), a versioned JSON
// document, and long-format plot data.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace speclab {

inline constexpr const char* kReportSchemaVersion = "1";

// Malformed or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
  mean_curve,
  variance_sweep,
  sup_process,
  deloc_audit,
  moments,
  dkw,
  sparse_regime,
  bounds_table
};

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::mean_curve;
  std::vector<std::size_t> n_values;  // most experiments use exactly one
  std::vector<double> p_grid;         // "p" is shorthand for a one-point grid
  std::optional<double> q;
  std::size_t replicates = 100;
  std::uint64_t seed = 1;
  std::size_t threads = 1;  // not echoed into reports
  double tol = 1e-10;
  std::size_t max_iter = 0;
  std::string out = "report";  // writes <out>.csv, <out>.json, <out>.timing.json

  // variance_sweep: Efron-Stein V+ on the first vplus_replicates tables.
  std::size_t vplus_edges = 0;
  std::size_t vplus_inner = 1;
  std::size_t vplus_replicates = 0;
  // sup_process
  std::string p_range = "theorem";  // "theorem": [64 log n / n, 1]; "full": [0, 1]
  std::size_t curve_replicates = 0;  // 0: same as replicates
  std::size_t curve_points = 41;
  // moments
  std::vector<double> k_values{3.0, 4.0, 8.0};
  std::vector<double> t_grid;
  // dkw
  std::vector<double> eps_grid;
  // deloc_audit: extra empirical threshold on sqrt(n) ||v||_inf
  std::optional<double> linf_threshold;
  // sparse_regime: tree sizes to census
  std::vector<long> tree_sizes{1, 2, 3, 4};

  // Throws ConfigError on unknown experiments, missing or out-of-range fields.
  static ExperimentConfig from_json(const nlohmann::json& j);
  void validate() const;
  // Every field except threads and out.
  nlohmann::json echo() const;
};

using Cell = std::variant<std::monostate, double, std::int64_t, std::uint64_t, bool, std::string>;

struct Check {
  std::string name;
  bool passed = true;
  bool hard = true;  // hard checks decide the exit status
  std::string detail;
};

struct ReplicateFailure {
  std::uint64_t seed = 0;
  std::size_t index = 0;
  std::string message;
};

struct PlotPoint {
  std::string series;
  double x = 0.0;
  double y = 0.0;
  double y_err = 0.0;
  double bound = 0.0;
  bool valid = true;
};

struct Report {
  std::string experiment;
  nlohmann::json config;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<Check> checks;
  std::vector<ReplicateFailure> failures;
  std::map<std::string, std::vector<PlotPoint>> plots;  // plot kind -> points
  double wall_seconds = 0.0;

  bool checks_passed() const;
  // 0 all hard checks pass, 2 a hard check failed, 3 replicates failed.
  int exit_code() const;
};

Report run(const ExperimentConfig& config);

std::string to_csv(const Report& report);
nlohmann::json to_json(const Report& report);
// Writes <prefix>.csv, <prefix>.json and the wall-time sidecar
// <prefix>.timing.json. The first two are byte-identical across reruns.
void write_report(const Report& report, const std::filesystem::path& prefix, std::size_t threads);

std::vector<std::string> plot_kinds(const nlohmann::json& report);
// Long-format CSV (series, x, y, y_err, bound, valid). Throws ConfigError
// when the report has no series of that kind.
std::string emit_plot_data(const nlohmann::json& report, const std::string& kind);

// CSV field formatting: reals with 17 significant digits.
std::string format_cell(const Cell& cell);

}  // namespace speclab
