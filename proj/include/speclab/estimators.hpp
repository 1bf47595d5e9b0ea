#pragma once

// Monte Carlo estimators for the quantities the bounds module constrains:
// mean and variance of lambda_p, sup-over-p deviations, Efron-Stein V+,
// centered moments, the DKW statistic, and an exact enumeration oracle.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "speclab/bounds.hpp"
#include "speclab/deloc.hpp"
#include "speclab/graph_process.hpp"
#include "speclab/spectra.hpp"

namespace speclab {

struct EstimatorOptions {
  SolverSettings solver;
  std::size_t threads = 1;
};

// A failure inside one replicate, tagged with the seed that reproduces it.
class ReplicateError : public std::runtime_error {
 public:
  ReplicateError(const std::string& what, std::uint64_t seed, std::size_t index)
      : std::runtime_error(what), seed_(seed), index_(index) {}
  std::uint64_t seed() const { return seed_; }
  std::size_t index() const { return index_; }

 private:
  std::uint64_t seed_;
  std::size_t index_;
};

struct MeanCurve {
  std::vector<double> p_grid;  // strictly increasing, in [0,1]
  std::vector<double> means;
  std::vector<double> std_errors;
  std::size_t replicates = 0;

  // Piecewise-linear interpolation; p must lie inside the grid.
  double mean_at(double p) const;
};

struct ReplicateResult {
  std::uint64_t seed = 0;
  std::vector<double> lambdas;  // one per grid point
  std::vector<DelocStats> deloc;
  double sup_deviation = 0.0;  // filled by callers that compute it
  std::vector<std::size_t> edge_counts;
  std::vector<std::size_t> max_degrees;
};

// One replicate: the table new_process(n, seed) evaluated at every grid point.
ReplicateResult run_replicate(std::size_t n, std::span<const double> p_grid, std::uint64_t seed,
                              const SolverSettings& settings = {});

// One weight table per replicate, seeded replicate_seed(seed, r); every grid
// point is evaluated on that table.
std::vector<ReplicateResult> run_replicates(std::size_t n, std::span<const double> p_grid,
                                            std::size_t replicates, std::uint64_t seed,
                                            const EstimatorOptions& options = {});

MeanCurve mean_curve(std::size_t n, std::span<const double> p_grid, std::size_t replicates,
                     std::uint64_t seed, const EstimatorOptions& options = {});

// Mean curve from replicate results computed on `p_grid`.
MeanCurve summarize_curve(std::span<const double> p_grid,
                          const std::vector<ReplicateResult>& results);

// lambda after each prefix of the stream: entry k is the top eigenvalue of
// the first k insertions, so the result has stream.size() + 1 entries.
std::vector<double> lambda_path(std::size_t n, const EdgeStream& stream,
                                const SolverSettings& settings = {});

// sup over p in [p_lo, p_hi] of |lambda_p - curve.mean_at(p)| along the
// table's path, taking both one-sided limits at every jump.
double sup_deviation_path(const EdgeWeightTable& table, const MeanCurve& curve, double p_lo,
                          double p_hi, const SolverSettings& settings = {});

struct SampleVariance {
  double variance = 0.0;   // unbiased
  double std_error = 0.0;  // jackknife; infinite below three samples
};

SampleVariance sample_variance(std::span<const double> samples);

SampleVariance variance_estimate(std::size_t n, double p, std::size_t replicates,
                                 std::uint64_t seed, const EstimatorOptions& options = {});

struct VPlusEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t edges_sampled = 0;
  double scale = 1.0;  // pair_count(n) / edges_sampled
  std::size_t solves = 0;
};

// Efron-Stein V+ = sum over pairs of E'[(Z - Z'_e)_+^2], Z = lambda_p, with
// Z'_e recomputed after redrawing U(e). Pairs are sampled uniformly without
// replacement and the sum is scaled by pair_count / edges_sampled.
VPlusEstimate efron_stein_vplus(const EdgeWeightTable& table, double p,
                                std::size_t edges_sampled, std::size_t inner_replicas,
                                std::uint64_t seed, const SolverSettings& settings = {});

// (mean of ((x - center)_+)^k)^{1/k}, or the negative part for TailSide::lower.
double moment_estimate(std::span<const double> samples, double center, double k, TailSide side);

// sup_p |(2/n) #{U < p} - (n - 1) p|, exact over the sorted weights.
double dkw_statistic(const EdgeWeightTable& table);

struct ExactMoments {
  double mean = 0.0;
  double variance = 0.0;
};

// Exact E lambda_p and Var lambda_p by enumerating all graphs on n <= 5
// vertices.
ExactMoments exact_small_oracle(std::size_t n, double p);

// Fraction of samples with |x - center| >= t, per t.
std::vector<double> empirical_tail(std::span<const double> samples, double center,
                                   std::span<const double> t_grid);

}  // namespace speclab
