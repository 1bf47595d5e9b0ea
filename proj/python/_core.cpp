#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "speclab/bounds.hpp"
#include "speclab/deloc.hpp"
#include "speclab/errors.hpp"
#include "speclab/estimators.hpp"
#include "speclab/experiments.hpp"
#include "speclab/graph_process.hpp"
#include "speclab/spectra.hpp"
#include "speclab/structure.hpp"

namespace py = pybind11;
using namespace speclab;

namespace {

SolverSettings solver(double tol, std::size_t max_iter) {
  SolverSettings s;
  s.tol = tol;
  s.max_iter = max_iter;
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spectral norm of the coupled Erdos-Renyi process";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<EdgeWeightTable>(m, "EdgeWeightTable")
      .def_property_readonly("n", &EdgeWeightTable::n)
      .def_property_readonly("seed", &EdgeWeightTable::seed)
      .def_property_readonly("generator_version", &EdgeWeightTable::generator_version)
      .def("weights", [](const EdgeWeightTable& t) {
        return std::vector<double>(t.weights().begin(), t.weights().end());
      })
      .def("weight", &EdgeWeightTable::weight, py::arg("i"), py::arg("j"));

  py::class_<GraphSnapshot>(m, "GraphSnapshot")
      .def_property_readonly("n", &GraphSnapshot::n)
      .def_property_readonly("p", &GraphSnapshot::p)
      .def_property_readonly("edge_count", &GraphSnapshot::edge_count)
      .def("max_degree", &GraphSnapshot::max_degree)
      .def("has_edge", &GraphSnapshot::has_edge)
      .def("edges", [](const GraphSnapshot& g) {
        std::vector<std::pair<Vertex, Vertex>> out;
        for (const auto& e : g.edges()) out.emplace_back(e.i, e.j);
        return out;
      });

  py::class_<EigenPair>(m, "EigenPair")
      .def_readonly("value", &EigenPair::value)
      .def_readonly("vector", &EigenPair::vector)
      .def_readonly("residual", &EigenPair::residual)
      .def_readonly("iterations", &EigenPair::iterations);

  py::class_<DelocStats>(m, "DelocStats")
      .def_readonly("linf_scaled", &DelocStats::linf_scaled)
      .def_readonly("l2_dev", &DelocStats::l2_dev)
      .def_readonly("alignment", &DelocStats::alignment)
      .def_readonly("beta", &DelocStats::beta);

  py::class_<BoundValue>(m, "BoundValue")
      .def_readonly("value", &BoundValue::value)
      .def_readonly("valid", &BoundValue::valid)
      .def_readonly("probability", &BoundValue::probability)
      .def_readonly("source", &BoundValue::source);

  py::class_<ComponentSummary>(m, "ComponentSummary")
      .def_readonly("component_count", &ComponentSummary::component_count)
      .def_readonly("sizes", &ComponentSummary::sizes)
      .def_readonly("is_forest", &ComponentSummary::is_forest)
      .def_readonly("tree_census", &ComponentSummary::tree_census)
      .def_readonly("max_degree", &ComponentSummary::max_degree);

  py::class_<MeanCurve>(m, "MeanCurve")
      .def_readonly("p_grid", &MeanCurve::p_grid)
      .def_readonly("means", &MeanCurve::means)
      .def_readonly("std_errors", &MeanCurve::std_errors)
      .def_readonly("replicates", &MeanCurve::replicates)
      .def("mean_at", &MeanCurve::mean_at);

  py::class_<VPlusEstimate>(m, "VPlusEstimate")
      .def_readonly("estimate", &VPlusEstimate::estimate)
      .def_readonly("std_error", &VPlusEstimate::std_error)
      .def_readonly("edges_sampled", &VPlusEstimate::edges_sampled)
      .def_readonly("scale", &VPlusEstimate::scale);

  m.def("new_process", &new_process, py::arg("n"), py::arg("seed"));
  m.def("snapshot", &snapshot, py::arg("table"), py::arg("p"));
  m.def("top_eigenpair",
        [](const GraphSnapshot& g, double tol, std::size_t max_iter) {
          return top_eigenpair(g, solver(tol, max_iter));
        },
        py::arg("g"), py::arg("tol") = 1e-10, py::arg("max_iter") = 0);
  m.def("centered_norm",
        [](const GraphSnapshot& g, double p, double tol) { return centered_norm(g, p, solver(tol, 0)); },
        py::arg("g"), py::arg("p"), py::arg("tol") = 1e-10);
  m.def("shifted_norm",
        [](const GraphSnapshot& g, double t, double tol) { return shifted_norm(g, t, solver(tol, 0)); },
        py::arg("g"), py::arg("t"), py::arg("tol") = 1e-10);
  m.def("dense_spectrum", &dense_spectrum_oracle, py::arg("g"));
  m.def("deloc_stats", [](const std::vector<double>& v) { return deloc_stats(v); }, py::arg("v"));
  m.def("analyze", &analyze, py::arg("g"));
  m.def("forest_lambda_cap", &forest_lambda_cap, py::arg("summary"));

  m.def("mean_curve",
        [](std::size_t n, const std::vector<double>& grid, std::size_t replicates, std::uint64_t seed,
           std::size_t threads) {
          EstimatorOptions o;
          o.threads = threads;
          return mean_curve(n, grid, replicates, seed, o);
        },
        py::arg("n"), py::arg("p_grid"), py::arg("replicates"), py::arg("seed"), py::arg("threads") = 1);
  m.def("variance_estimate",
        [](std::size_t n, double p, std::size_t replicates, std::uint64_t seed, std::size_t threads) {
          EstimatorOptions o;
          o.threads = threads;
          const SampleVariance v = variance_estimate(n, p, replicates, seed, o);
          return std::pair{v.variance, v.std_error};
        },
        py::arg("n"), py::arg("p"), py::arg("replicates"), py::arg("seed"), py::arg("threads") = 1);
  m.def("efron_stein_vplus",
        [](const EdgeWeightTable& t, double p, std::size_t edges, std::size_t inner, std::uint64_t seed) {
          return efron_stein_vplus(t, p, edges, inner, seed);
        },
        py::arg("table"), py::arg("p"), py::arg("edges_sampled"), py::arg("inner_replicas"), py::arg("seed"));
  m.def("sup_deviation_path",
        [](const EdgeWeightTable& t, const MeanCurve& c, double lo, double hi) {
          return sup_deviation_path(t, c, lo, hi);
        },
        py::arg("table"), py::arg("curve"), py::arg("p_lo"), py::arg("p_hi"));
  m.def("dkw_statistic", &dkw_statistic, py::arg("table"));
  m.def("exact_small_oracle",
        [](std::size_t n, double p) {
          const ExactMoments e = exact_small_oracle(n, p);
          return std::pair{e.mean, e.variance};
        },
        py::arg("n"), py::arg("p"));

  m.def("akv_tail", &akv_tail, py::arg("t"));
  m.def("basic_sparse_norm", &basic_sparse_norm, py::arg("n"));
  m.def("centered_uniform_bound", &centered_uniform_bound, py::arg("n"), py::arg("q"));
  m.def("unif_deloc_bound", &unif_deloc_bound, py::arg("n"), py::arg("q"));
  m.def("weak_deloc", &weak_deloc, py::arg("n"), py::arg("p"));
  m.def("dkw_tail", &dkw_tail, py::arg("m"), py::arg("eps"));
  m.def("forest_spectral_bound", &forest_spectral_bound, py::arg("k"));
  m.def("sparse_threshold", &sparse_threshold, py::arg("n"), py::arg("k"));

  m.def("run_experiment",
        [](const std::string& config_json) {
          const Report r = run(ExperimentConfig::from_json(nlohmann::json::parse(config_json)));
          return std::tuple{to_csv(r), to_json(r).dump(2), r.exit_code()};
        },
        py::arg("config_json"),
        "Runs an experiment; returns (csv, json, exit_code).");
}
