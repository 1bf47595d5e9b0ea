#include "speclab/graph_process.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "speclab/errors.hpp"
#include "speclab/rng.hpp"

namespace speclab {
namespace {

// Counter domains: original weights and resampled copies never share a
// counter, so a redraw is independent of the value it replaces.
constexpr std::uint32_t kWeightDomain = 0x57454947u;    // "WEIG"
constexpr std::uint32_t kResampleDomain = 0x52455350u;  // "RESP"

void check_pair(std::size_t n, Vertex i, Vertex j) {
  if (i >= j || j >= n) {
    throw InvalidArgument("vertex pair (" + std::to_string(i) + ", " + std::to_string(j) +
                          ") must satisfy i < j < n = " + std::to_string(n));
  }
}

}  // namespace

VertexPair pair_at(std::size_t n, std::size_t index) {
  if (index >= pair_count(n)) throw InvalidArgument("pair index out of range");
  // Row i starts at pair_index(n, i, i + 1). Solve the quadratic, then fix
  // rounding by stepping.
  const double nn = static_cast<double>(n);
  const double disc = (2 * nn - 1) * (2 * nn - 1) - 8.0 * static_cast<double>(index);
  auto i = static_cast<std::size_t>(std::max(0.0, std::floor(((2 * nn - 1) - std::sqrt(std::max(disc, 0.0))) / 2)));
  while (i > 0 && pair_index(n, i, i + 1) > index) --i;
  while (i + 1 < n - 1 && pair_index(n, i + 1, i + 2) <= index) ++i;
  const std::size_t j = index - pair_index(n, i, i + 1) + i + 1;
  return {static_cast<Vertex>(i), static_cast<Vertex>(j)};
}

EdgeWeightTable::EdgeWeightTable(std::size_t n, std::uint64_t seed, std::vector<double> weights,
                                 std::string generator_version)
    : n_(n), seed_(seed), weights_(std::move(weights)), version_(std::move(generator_version)) {
  if (n_ == 0) throw InvalidArgument("weight table needs n >= 1");
  if (weights_.size() != pair_count(n_)) {
    throw InvalidArgument("weight table for n = " + std::to_string(n_) + " needs " +
                          std::to_string(pair_count(n_)) + " weights, got " +
                          std::to_string(weights_.size()));
  }
  for (double w : weights_) {
    if (!(w >= 0.0 && w < 1.0)) throw InvalidArgument("edge weights must lie in [0,1)");
  }
}

EdgeWeightTable EdgeWeightTable::from_weights(std::size_t n, std::vector<double> weights,
                                              std::uint64_t seed) {
  return EdgeWeightTable(n, seed, std::move(weights), "explicit");
}

double EdgeWeightTable::weight(Vertex i, Vertex j) const {
  check_pair(n_, i, j);
  return weights_[pair_index(n_, i, j)];
}

EdgeWeightTable new_process(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("new_process: n must be >= 1");
  std::vector<double> weights(pair_count(n));
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      weights[k++] = keyed_uniform(seed, static_cast<std::uint32_t>(i),
                                   static_cast<std::uint32_t>(j), 0, kWeightDomain);
    }
  }
  return EdgeWeightTable(n, seed, std::move(weights), std::string(kGeneratorVersion));
}

double resampled_weight(const EdgeWeightTable& table, Vertex i, Vertex j,
                        std::uint32_t replica_index) {
  check_pair(table.n(), i, j);
  return keyed_uniform(table.seed(), i, j, replica_index, kResampleDomain);
}

EdgeWeightTable resample_edge(const EdgeWeightTable& table, Vertex i, Vertex j,
                              std::uint32_t replica_index) {
  std::vector<double> weights(table.weights().begin(), table.weights().end());
  weights[pair_index(table.n(), i, j)] = resampled_weight(table, i, j, replica_index);
  return EdgeWeightTable(table.n(), table.seed(), std::move(weights), table.generator_version());
}

GraphSnapshot GraphSnapshot::from_edges(std::size_t n, double p,
                                        std::span<const VertexPair> edges) {
  GraphSnapshot g;
  g.p_ = p;
  g.offsets_.assign(n + 1, 0);
  for (const auto& e : edges) {
    check_pair(n, e.i, e.j);
    ++g.offsets_[e.i + 1];
    ++g.offsets_[e.j + 1];
  }
  for (std::size_t v = 0; v < n; ++v) g.offsets_[v + 1] += g.offsets_[v];
  // Scatter into unsorted rows, then transpose: the transpose of a symmetric
  // pattern visits columns in order, so every row comes out sorted.
  std::vector<Vertex> scratch(2 * edges.size());
  std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const auto& e : edges) {
    scratch[cursor[e.i]++] = e.j;
    scratch[cursor[e.j]++] = e.i;
  }
  g.neighbors_.resize(scratch.size());
  cursor.assign(g.offsets_.begin(), g.offsets_.end() - 1);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t k = g.offsets_[v]; k < g.offsets_[v + 1]; ++k) {
      g.neighbors_[cursor[scratch[k]]++] = static_cast<Vertex>(v);
    }
  }
  for (std::size_t v = 0; v < n; ++v) {
    auto first = g.neighbors_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v]);
    auto last = g.neighbors_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v + 1]);
    if (std::adjacent_find(first, last) != last) throw InvalidArgument("duplicate edge");
  }
  return g;
}

std::size_t GraphSnapshot::max_degree() const {
  std::size_t best = 0;
  for (std::size_t v = 0; v < n(); ++v) best = std::max(best, degree(static_cast<Vertex>(v)));
  return best;
}

bool GraphSnapshot::has_edge(Vertex i, Vertex j) const {
  if (i >= n() || j >= n()) return false;
  const auto row = neighbors(i);
  return std::binary_search(row.begin(), row.end(), j);
}

std::vector<VertexPair> GraphSnapshot::edges() const {
  std::vector<VertexPair> out;
  out.reserve(edge_count());
  for (std::size_t i = 0; i < n(); ++i) {
    for (Vertex j : neighbors(static_cast<Vertex>(i))) {
      if (j > i) out.push_back({static_cast<Vertex>(i), j});
    }
  }
  return out;
}

GraphSnapshot snapshot(const EdgeWeightTable& table, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("snapshot: p must lie in [0,1]");
  const std::size_t n = table.n();
  const auto w = table.weights();
  std::vector<VertexPair> edges;
  edges.reserve(static_cast<std::size_t>(static_cast<double>(w.size()) * p * 1.05) + 16);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++k) {
      if (w[k] < p) edges.push_back({static_cast<Vertex>(i), static_cast<Vertex>(j)});
    }
  }
  return GraphSnapshot::from_edges(n, p, edges);
}

EdgeStream edge_stream(const EdgeWeightTable& table) {
  const std::size_t n = table.n();
  const auto w = table.weights();
  EdgeStream stream;
  stream.reserve(w.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++k) {
      stream.push_back({w[k], static_cast<Vertex>(i), static_cast<Vertex>(j)});
    }
  }
  // Pairs are generated in lexicographic order, so a stable sort on weight
  // alone gives the (weight, i, j) order.
  std::stable_sort(stream.begin(), stream.end(),
                   [](const StreamEdge& a, const StreamEdge& b) { return a.weight < b.weight; });
  return stream;
}

GraphSnapshot stream_prefix(std::size_t n, const EdgeStream& stream, std::size_t count,
                            double p) {
  if (count > stream.size()) throw InvalidArgument("stream_prefix: count exceeds stream length");
  std::vector<VertexPair> edges;
  edges.reserve(count);
  for (std::size_t k = 0; k < count; ++k) edges.push_back({stream[k].i, stream[k].j});
  return GraphSnapshot::from_edges(n, p, edges);
}

std::size_t prefix_length(const EdgeStream& stream, double p) {
  const auto it = std::lower_bound(stream.begin(), stream.end(), p,
                                   [](const StreamEdge& e, double v) { return e.weight < v; });
  return static_cast<std::size_t>(it - stream.begin());
}

}  // namespace speclab
