#pragma once

// The coupled Erdos-Renyi process: one uniform weight U(i,j) per vertex pair
// drives every snapshot A_p = [U(i,j) < p], every insertion path, and every
// single-pair resampling.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace speclab {

using Vertex = std::uint32_t;

struct VertexPair {
  Vertex i;
  Vertex j;
  friend bool operator==(const VertexPair&, const VertexPair&) = default;
};

constexpr std::size_t pair_count(std::size_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

// Row-major position of pair (i, j), i < j, in the upper triangle.
constexpr std::size_t pair_index(std::size_t n, std::size_t i, std::size_t j) {
  return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

// Inverse of pair_index.
VertexPair pair_at(std::size_t n, std::size_t index);

class EdgeWeightTable {
 public:
  // Weights in pair_index order; every weight must lie in [0,1).
  EdgeWeightTable(std::size_t n, std::uint64_t seed, std::vector<double> weights,
                  std::string generator_version);

  // Hand-written weights, mainly for tests. The seed is still used by
  // resample_edge.
  static EdgeWeightTable from_weights(std::size_t n, std::vector<double> weights,
                                      std::uint64_t seed = 0);

  std::size_t n() const { return n_; }
  std::uint64_t seed() const { return seed_; }
  const std::string& generator_version() const { return version_; }
  std::span<const double> weights() const { return weights_; }
  double weight(Vertex i, Vertex j) const;

 private:
  std::size_t n_;
  std::uint64_t seed_;
  std::vector<double> weights_;
  std::string version_;
};

// Deterministic table: weight(i,j) depends only on (seed, i, j).
EdgeWeightTable new_process(std::size_t n, std::uint64_t seed);

// Independent redraw of U(i,j) addressed by replica_index. Redraws live in a
// separate counter domain from the original weights.
double resampled_weight(const EdgeWeightTable& table, Vertex i, Vertex j,
                        std::uint32_t replica_index);

// Copy of `table` with U(i,j) replaced by resampled_weight(...).
EdgeWeightTable resample_edge(const EdgeWeightTable& table, Vertex i, Vertex j,
                              std::uint32_t replica_index);

// Simple undirected graph in compressed sparse row form. Neighbor lists are
// sorted; no self-loops.
class GraphSnapshot {
 public:
  GraphSnapshot() = default;
  static GraphSnapshot from_edges(std::size_t n, double p, std::span<const VertexPair> edges);

  std::size_t n() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  double p() const { return p_; }
  std::size_t edge_count() const { return neighbors_.size() / 2; }

  std::span<const Vertex> neighbors(Vertex v) const {
    return {neighbors_.data() + offsets_[v], neighbors_.data() + offsets_[v + 1]};
  }
  std::size_t degree(Vertex v) const { return offsets_[v + 1] - offsets_[v]; }
  std::size_t max_degree() const;
  bool has_edge(Vertex i, Vertex j) const;
  // Edges (i < j) in lexicographic order.
  std::vector<VertexPair> edges() const;

  std::span<const std::size_t> offsets() const { return offsets_; }
  std::span<const Vertex> adjacency() const { return neighbors_; }

 private:
  double p_ = 0.0;
  std::vector<std::size_t> offsets_;
  std::vector<Vertex> neighbors_;
};

// A_p: edge (i,j) present iff U(i,j) < p.
GraphSnapshot snapshot(const EdgeWeightTable& table, double p);

struct StreamEdge {
  double weight;
  Vertex i;
  Vertex j;
};

// All pairs sorted by weight, ties broken lexicographically by (i, j).
using EdgeStream = std::vector<StreamEdge>;

EdgeStream edge_stream(const EdgeWeightTable& table);

// Graph made of the first `count` stream edges, labelled with level p.
GraphSnapshot stream_prefix(std::size_t n, const EdgeStream& stream, std::size_t count,
                            double p);

// Number of stream edges with weight < p (binary search).
std::size_t prefix_length(const EdgeStream& stream, double p);

}  // namespace speclab
