#include "speclab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "path_tracker.hpp"
#include "speclab/errors.hpp"
#include "speclab/parallel.hpp"
#include "speclab/rng.hpp"

namespace speclab {
namespace {

constexpr std::uint32_t kEdgeSampleStream = 0x45535650u;  // "ESVP"

void check_grid(std::span<const double> p_grid) {
  if (p_grid.empty()) throw InvalidArgument("p grid is empty");
  for (std::size_t k = 0; k < p_grid.size(); ++k) {
    if (!(p_grid[k] >= 0.0 && p_grid[k] <= 1.0)) throw InvalidArgument("p grid values must lie in [0,1]");
    if (k > 0 && !(p_grid[k] > p_grid[k - 1])) throw InvalidArgument("p grid must be strictly increasing");
  }
}

double mean_of(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// `count` distinct indices in [0, population), sorted (Floyd's algorithm).
std::vector<std::size_t> sample_without_replacement(std::size_t population, std::size_t count,
                                                    std::uint64_t seed) {
  CounterStream rng(seed, kEdgeSampleStream);
  std::vector<std::size_t> chosen;
  chosen.reserve(count);
  std::vector<bool> taken(population, false);
  for (std::size_t j = population - count; j < population; ++j) {
    const auto t = static_cast<std::size_t>(rng.next_below(j + 1));
    const std::size_t pick = taken[t] ? j : t;
    taken[pick] = true;
    chosen.push_back(pick);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace

double MeanCurve::mean_at(double p) const {
  if (p_grid.empty()) throw InvalidArgument("mean_at: empty curve");
  if (!(p >= p_grid.front() && p <= p_grid.back())) {
    throw InvalidArgument("mean_at: p = " + std::to_string(p) + " outside the curve's grid");
  }
  const auto it = std::lower_bound(p_grid.begin(), p_grid.end(), p);
  const auto k = static_cast<std::size_t>(it - p_grid.begin());
  if (*it == p) return means[k];
  const double t = (p - p_grid[k - 1]) / (p_grid[k] - p_grid[k - 1]);
  return means[k - 1] + t * (means[k] - means[k - 1]);
}

ReplicateResult run_replicate(std::size_t n, std::span<const double> p_grid, std::uint64_t seed,
                              const SolverSettings& settings) {
  ReplicateResult out;
  out.seed = seed;
  const EdgeWeightTable table = new_process(n, seed);
  for (const double p : p_grid) {
    const GraphSnapshot g = snapshot(table, p);
    const EigenPair pair = top_eigenpair(g, settings);
    out.lambdas.push_back(pair.value);
    out.deloc.push_back(deloc_stats(pair.vector));
    out.edge_counts.push_back(g.edge_count());
    out.max_degrees.push_back(g.max_degree());
  }
  return out;
}

std::vector<ReplicateResult> run_replicates(std::size_t n, std::span<const double> p_grid,
                                            std::size_t replicates, std::uint64_t seed,
                                            const EstimatorOptions& options) {
  if (n == 0) throw InvalidArgument("run_replicates: n must be >= 1");
  check_grid(p_grid);
  return parallel_map<ReplicateResult>(replicates, options.threads, [&](std::size_t r) {
    const std::uint64_t s = replicate_seed(seed, r);
    try {
      return run_replicate(n, p_grid, s, options.solver);
    } catch (const std::exception& e) {
      throw ReplicateError(std::string(e.what()) + " [replicate " + std::to_string(r) + ", seed " +
                               std::to_string(s) + "]",
                           s, r);
    }
  });
}

MeanCurve summarize_curve(std::span<const double> p_grid,
                          const std::vector<ReplicateResult>& results) {
  MeanCurve curve;
  curve.p_grid.assign(p_grid.begin(), p_grid.end());
  curve.replicates = results.size();
  std::vector<double> column(results.size());
  for (std::size_t k = 0; k < p_grid.size(); ++k) {
    for (std::size_t r = 0; r < results.size(); ++r) column[r] = results[r].lambdas.at(k);
    const double mean = mean_of(column);
    double ss = 0.0;
    for (const double x : column) ss += (x - mean) * (x - mean);
    const double var = results.size() > 1 ? ss / static_cast<double>(results.size() - 1) : 0.0;
    curve.means.push_back(mean);
    curve.std_errors.push_back(std::sqrt(var / static_cast<double>(results.size())));
  }
  return curve;
}

MeanCurve mean_curve(std::size_t n, std::span<const double> p_grid, std::size_t replicates,
                     std::uint64_t seed, const EstimatorOptions& options) {
  if (replicates < 2) throw InvalidArgument("mean_curve: replicates must be >= 2");
  return summarize_curve(p_grid, run_replicates(n, p_grid, replicates, seed, options));
}

std::vector<double> lambda_path(std::size_t n, const EdgeStream& stream,
                                const SolverSettings& settings) {
  if (stream.size() > pair_count(n)) throw InvalidArgument("lambda_path: stream longer than n(n-1)/2");
  std::vector<double> out;
  out.reserve(stream.size() + 1);
  out.push_back(0.0);
  if (stream.empty()) return out;
  detail::PathTracker tracker(n, settings);
  for (const StreamEdge& e : stream) out.push_back(tracker.insert(e.i, e.j));
  return out;
}

double sup_deviation_path(const EdgeWeightTable& table, const MeanCurve& curve, double p_lo,
                          double p_hi, const SolverSettings& settings) {
  if (!(p_lo >= 0.0 && p_lo <= p_hi && p_hi <= 1.0)) {
    throw InvalidArgument("sup_deviation_path: need 0 <= p_lo <= p_hi <= 1, got [" +
                          std::to_string(p_lo) + ", " + std::to_string(p_hi) + "]");
  }
  if (curve.p_grid.empty() || curve.p_grid.front() > p_lo || curve.p_grid.back() < p_hi) {
    throw InvalidArgument("sup_deviation_path: mean curve does not cover [p_lo, p_hi]");
  }
  const std::size_t n = table.n();
  const EdgeStream stream = edge_stream(table);

  // Candidate levels: the endpoints, every jump, and every knot of the mean
  // curve. Between consecutive candidates lambda is constant and the mean is
  // linear, so the sup is attained as a limit at one of them.
  std::vector<double> points{p_lo, p_hi};
  for (const StreamEdge& e : stream)
    if (e.weight > p_lo && e.weight < p_hi) points.push_back(e.weight);
  for (const double g : curve.p_grid)
    if (g > p_lo && g < p_hi) points.push_back(g);
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  struct Candidate {
    std::size_t below;     // #{U < p}: lambda at p and just left of p
    std::size_t at_most;   // #{U <= p}: lambda just right of p
    double mean;
  };
  std::vector<Candidate> cands;
  cands.reserve(points.size());
  for (const double p : points) {
    const auto lo = std::lower_bound(stream.begin(), stream.end(), p,
                                     [](const StreamEdge& e, double v) { return e.weight < v; });
    const auto hi = std::upper_bound(stream.begin(), stream.end(), p,
                                     [](double v, const StreamEdge& e) { return v < e.weight; });
    Candidate c{static_cast<std::size_t>(lo - stream.begin()),
                static_cast<std::size_t>(hi - stream.begin()), curve.mean_at(p)};
    if (p == p_hi) c.at_most = c.below;  // no right limit inside the range
    cands.push_back(c);
  }

  // lambda after `count` insertions, memoized; each solve starts from the
  // nearest vector already computed.
  std::map<std::size_t, EigenPair> memo;
  auto lambda_at = [&](std::size_t count) -> double {
    if (const auto it = memo.find(count); it != memo.end()) return it->second.value;
    const GraphSnapshot g = stream_prefix(n, stream, count, 1.0);
    SolverSettings s = settings;
    if (g.edge_count() > 0 && !memo.empty()) {
      auto near = memo.lower_bound(count);
      if (near == memo.end() || (near != memo.begin() && count - std::prev(near)->first < near->first - count)) {
        near = std::prev(near);
      }
      if (near->second.vector.size() == n && near->second.value > 0.0) {
        // Blend in the flat vector so no component starts with zero weight.
        s.start = near->second.vector;
        const double lift = 1e-3 / std::sqrt(static_cast<double>(n));
        for (double& x : s.start) x = std::abs(x) + lift;
      }
    }
    return memo.emplace(count, top_eigenpair(g, s)).first->second.value;
  };

  auto deviation = [&](const Candidate& c) {
    return std::max(std::abs(lambda_at(c.below) - c.mean), std::abs(lambda_at(c.at_most) - c.mean));
  };

  // Branch and bound over candidate ranges. lambda is nondecreasing in the
  // insertion count, so on [a, b] it lies in [lambda(below_a), lambda(at_most_b)].
  double best = std::max(deviation(cands.front()), deviation(cands.back()));
  struct Range {
    std::size_t a, b;
  };
  std::vector<Range> stack{{0, cands.size() - 1}};
  while (!stack.empty()) {
    const Range r = stack.back();
    stack.pop_back();
    if (r.b - r.a <= 1) {
      best = std::max({best, deviation(cands[r.a]), deviation(cands[r.b])});
      continue;
    }
    double m_min = std::numeric_limits<double>::infinity();
    double m_max = -m_min;
    for (std::size_t k = r.a; k <= r.b; ++k) {
      m_min = std::min(m_min, cands[k].mean);
      m_max = std::max(m_max, cands[k].mean);
    }
    const double low = lambda_at(cands[r.a].below);
    const double high = lambda_at(cands[r.b].at_most);
    const double bound = std::max(high - m_min, m_max - low);
    if (bound <= best) continue;
    const std::size_t mid = r.a + (r.b - r.a) / 2;
    best = std::max(best, deviation(cands[mid]));
    stack.push_back({mid, r.b});
    stack.push_back({r.a, mid});
  }
  return best;
}

SampleVariance sample_variance(std::span<const double> samples) {
  const std::size_t r = samples.size();
  if (r < 2) throw InvalidArgument("sample_variance: need at least two samples");
  const double mean = mean_of(samples);
  double q = 0.0;
  for (const double x : samples) q += (x - mean) * (x - mean);
  const double rd = static_cast<double>(r);
  SampleVariance out{q / (rd - 1.0), std::numeric_limits<double>::infinity()};
  if (r < 3) return out;
  // Leave-one-out variances in closed form, then the jackknife spread.
  std::vector<double> loo(r);
  for (std::size_t i = 0; i < r; ++i) {
    const double d = samples[i] - mean;
    loo[i] = (q - rd / (rd - 1.0) * d * d) / (rd - 2.0);
  }
  const double loo_mean = mean_of(loo);
  double spread = 0.0;
  for (const double v : loo) spread += (v - loo_mean) * (v - loo_mean);
  out.std_error = std::sqrt((rd - 1.0) / rd * spread);
  return out;
}

SampleVariance variance_estimate(std::size_t n, double p, std::size_t replicates,
                                 std::uint64_t seed, const EstimatorOptions& options) {
  if (replicates < 2) throw InvalidArgument("variance_estimate: replicates must be >= 2");
  const double grid[] = {p};
  const auto results = run_replicates(n, grid, replicates, seed, options);
  std::vector<double> lambdas;
  lambdas.reserve(results.size());
  for (const auto& r : results) lambdas.push_back(r.lambdas[0]);
  return sample_variance(lambdas);
}

VPlusEstimate efron_stein_vplus(const EdgeWeightTable& table, double p,
                                std::size_t edges_sampled, std::size_t inner_replicas,
                                std::uint64_t seed, const SolverSettings& settings) {
  const std::size_t n = table.n();
  const std::size_t m = pair_count(n);
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("efron_stein_vplus: p must lie in [0,1]");
  if (edges_sampled < 1 || edges_sampled > m) {
    throw InvalidArgument("efron_stein_vplus: edges_sampled must lie in [1, n(n-1)/2]");
  }
  if (inner_replicas < 1) throw InvalidArgument("efron_stein_vplus: inner_replicas must be >= 1");

  const GraphSnapshot g = snapshot(table, p);
  const EigenPair z = top_eigenpair(g, settings);
  SolverSettings warm = settings;
  warm.start = z.vector;

  VPlusEstimate out;
  out.edges_sampled = edges_sampled;
  out.scale = static_cast<double>(m) / static_cast<double>(edges_sampled);
  std::vector<double> terms;
  terms.reserve(edges_sampled);
  for (const std::size_t index : sample_without_replacement(m, edges_sampled, seed)) {
    const VertexPair e = pair_at(n, index);
    double term = 0.0;
    // Redrawing U(e) changes Z only when it flips the indicator. Adding an
    // edge cannot lower lambda, so only removals contribute; the removal
    // value is shared by every redraw that removes the edge.
    if (table.weight(e.i, e.j) < p) {
      double removed = std::numeric_limits<double>::quiet_NaN();
      for (std::uint32_t r = 0; r < inner_replicas; ++r) {
        if (resampled_weight(table, e.i, e.j, r) < p) continue;
        if (std::isnan(removed)) {
          removed = top_eigenpair_lanczos(adjacency_without_edge(g, e.i, e.j), warm).value;
          ++out.solves;
        }
        const double drop = std::max(0.0, z.value - removed);
        term += drop * drop;
      }
      term /= static_cast<double>(inner_replicas);
    }
    terms.push_back(term);
  }
  const double total = std::accumulate(terms.begin(), terms.end(), 0.0);
  out.estimate = out.scale * total;
  if (edges_sampled == m) {
    out.std_error = 0.0;
  } else if (edges_sampled < 2) {
    out.std_error = std::numeric_limits<double>::infinity();
  } else {
    const double s = static_cast<double>(edges_sampled);
    const double mean = total / s;
    double ss = 0.0;
    for (const double t : terms) ss += (t - mean) * (t - mean);
    const double s2 = ss / (s - 1.0);
    out.std_error = static_cast<double>(m) * std::sqrt((1.0 - s / static_cast<double>(m)) * s2 / s);
  }
  return out;
}

double moment_estimate(std::span<const double> samples, double center, double k, TailSide side) {
  if (samples.empty()) throw InvalidArgument("moment_estimate: no samples");
  if (!(k >= 1.0)) throw InvalidArgument("moment_estimate: k must be >= 1");
  double acc = 0.0;
  for (const double x : samples) {
    const double part = side == TailSide::upper ? x - center : center - x;
    if (part > 0.0) acc += std::pow(part, k);
  }
  return std::pow(acc / static_cast<double>(samples.size()), 1.0 / k);
}

double dkw_statistic(const EdgeWeightTable& table) {
  const std::size_t n = table.n();
  if (n < 2) throw InvalidArgument("dkw_statistic: n must be >= 2");
  std::vector<double> u(table.weights().begin(), table.weights().end());
  std::sort(u.begin(), u.end());
  const double m = static_cast<double>(u.size());
  // sup_p |F_m(p) - p| with F_m(p) = #{U < p}/m, checked on both sides of
  // every distinct weight.
  double sup = 0.0;
  for (std::size_t k = 0; k < u.size();) {
    std::size_t end = k;
    while (end < u.size() && u[end] == u[k]) ++end;
    const double left = static_cast<double>(k) / m;
    const double right = static_cast<double>(end) / m;
    sup = std::max({sup, u[k] - left, right - u[k]});
    k = end;
  }
  return static_cast<double>(n - 1) * sup;
}

ExactMoments exact_small_oracle(std::size_t n, double p) {
  if (n < 1 || n > 5) throw InvalidArgument("exact_small_oracle: n must lie in [1,5]");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("exact_small_oracle: p must lie in [0,1]");
  const std::size_t m = pair_count(n);
  std::vector<double> weights, values;
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    std::vector<double> a(n * n, 0.0);
    int edges = 0;
    for (std::size_t k = 0; k < m; ++k) {
      if (!(mask >> k & 1)) continue;
      const VertexPair e = pair_at(n, k);
      a[e.i * n + e.j] = a[e.j * n + e.i] = 1.0;
      ++edges;
    }
    weights.push_back(std::pow(p, edges) * std::pow(1.0 - p, static_cast<int>(m) - edges));
    values.push_back(jacobi_eigenvalues(std::move(a), n).front());
  }
  ExactMoments out;
  for (std::size_t k = 0; k < values.size(); ++k) out.mean += weights[k] * values[k];
  for (std::size_t k = 0; k < values.size(); ++k) {
    out.variance += weights[k] * (values[k] - out.mean) * (values[k] - out.mean);
  }
  return out;
}

std::vector<double> empirical_tail(std::span<const double> samples, double center,
                                   std::span<const double> t_grid) {
  if (samples.empty()) throw InvalidArgument("empirical_tail: no samples");
  std::vector<double> deviations;
  deviations.reserve(samples.size());
  for (const double x : samples) deviations.push_back(std::abs(x - center));
  std::sort(deviations.begin(), deviations.end());
  std::vector<double> out;
  out.reserve(t_grid.size());
  for (const double t : t_grid) {
    const auto first = std::lower_bound(deviations.begin(), deviations.end(), t);
    out.push_back(static_cast<double>(deviations.end() - first) / static_cast<double>(deviations.size()));
  }
  return out;
}

}  // namespace speclab
