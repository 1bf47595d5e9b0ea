#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "speclab/errors.hpp"
#include "speclab/graph_process.hpp"
#include "speclab/rng.hpp"

using namespace speclab;

namespace {

std::set<std::pair<Vertex, Vertex>> edge_set(const GraphSnapshot& g) {
  std::set<std::pair<Vertex, Vertex>> out;
  for (const auto& e : g.edges()) out.insert({e.i, e.j});
  return out;
}

// U12 = 0.2, U13 = 0.7, U23 = 0.5 in 0-based labels.
EdgeWeightTable three_vertex_table() { return EdgeWeightTable::from_weights(3, {0.2, 0.7, 0.5}); }

}  // namespace

TEST(PairIndex, RoundTrip) {
  for (std::size_t n : {2u, 3u, 7u, 40u}) {
    std::size_t expected = 0;
    for (Vertex i = 0; i < n; ++i) {
      for (Vertex j = i + 1; j < n; ++j) {
        ASSERT_EQ(pair_index(n, i, j), expected);
        const VertexPair p = pair_at(n, expected);
        ASSERT_EQ(p.i, i);
        ASSERT_EQ(p.j, j);
        ++expected;
      }
    }
    EXPECT_EQ(expected, pair_count(n));
  }
}

TEST(NewProcess, SingleVertexHasNoWeights) {
  const auto t = new_process(1, 7);
  EXPECT_EQ(t.n(), 1u);
  EXPECT_TRUE(t.weights().empty());
}

TEST(NewProcess, ZeroVerticesRejected) { EXPECT_THROW(new_process(0, 1), InvalidArgument); }

TEST(NewProcess, Deterministic) {
  const auto a = new_process(3, 99);
  const auto b = new_process(3, 99);
  ASSERT_EQ(a.weights().size(), 3u);
  EXPECT_TRUE(std::equal(a.weights().begin(), a.weights().end(), b.weights().begin()));
  EXPECT_EQ(a.generator_version(), std::string(kGeneratorVersion));
}

TEST(NewProcess, WeightMeanMatchesUniform) {
  const auto t = new_process(100, 1);
  const auto w = t.weights();
  ASSERT_EQ(w.size(), 4950u);
  double mean = 0.0;
  for (double u : w) {
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    mean += u;
  }
  mean /= static_cast<double>(w.size());
  EXPECT_LT(std::abs(mean - 0.5), 3.0 / std::sqrt(12.0 * 4950.0));
}

TEST(NewProcess, WeightDependsOnlyOnSeedAndPair) {
  const auto small = new_process(5, 11);
  const auto large = new_process(9, 11);
  for (Vertex i = 0; i < 5; ++i)
    for (Vertex j = i + 1; j < 5; ++j) EXPECT_EQ(small.weight(i, j), large.weight(i, j));
}

TEST(EdgeWeightTable, RejectsWeightsOutsideUnitInterval) {
  EXPECT_THROW(EdgeWeightTable::from_weights(2, {1.0}), InvalidArgument);
  EXPECT_THROW(EdgeWeightTable::from_weights(2, {-0.1}), InvalidArgument);
  EXPECT_THROW(EdgeWeightTable::from_weights(3, {0.1}), InvalidArgument);
}

TEST(Snapshot, Endpoints) {
  const auto t = new_process(12, 3);
  EXPECT_EQ(snapshot(t, 0.0).edge_count(), 0u);
  EXPECT_EQ(snapshot(t, 1.0).edge_count(), pair_count(12));
}

TEST(Snapshot, StrictInequality) {
  const auto g = snapshot(three_vertex_table(), 0.5);
  EXPECT_EQ(g.edge_count(), 1u);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_FALSE(g.has_edge(1, 2));
  EXPECT_FALSE(g.has_edge(0, 2));
}

TEST(Snapshot, RejectsOutOfRangeP) {
  const auto t = new_process(4, 1);
  EXPECT_THROW(snapshot(t, -0.01), InvalidArgument);
  EXPECT_THROW(snapshot(t, 1.01), InvalidArgument);
}

TEST(Snapshot, StructureInvariants) {
  const auto t = new_process(60, 5);
  const auto g = snapshot(t, 0.3);
  std::size_t degree_sum = 0;
  for (Vertex v = 0; v < 60; ++v) {
    const auto nb = g.neighbors(v);
    degree_sum += nb.size();
    EXPECT_TRUE(std::is_sorted(nb.begin(), nb.end()));
    for (Vertex u : nb) {
      EXPECT_NE(u, v);
      EXPECT_TRUE(g.has_edge(u, v));
      EXPECT_LT(t.weight(std::min(u, v), std::max(u, v)), 0.3);
    }
  }
  EXPECT_EQ(degree_sum, 2 * g.edge_count());
}

TEST(Snapshot, CouplingIsMonotone) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = new_process(25, seed);
    const double grid[] = {0.0, 0.05, 0.1, 0.3, 0.5, 0.77, 1.0};
    std::set<std::pair<Vertex, Vertex>> previous;
    for (double p : grid) {
      const auto current = edge_set(snapshot(t, p));
      EXPECT_TRUE(std::includes(current.begin(), current.end(), previous.begin(), previous.end()));
      previous = current;
    }
  }
}

TEST(Snapshot, EdgeFrequencyMatchesP) {
  const double p = 0.37;
  std::size_t present = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    const auto t = new_process(10, replicate_seed(77, seed));
    present += snapshot(t, p).edge_count();
    total += pair_count(10);
  }
  const double freq = static_cast<double>(present) / static_cast<double>(total);
  EXPECT_LT(std::abs(freq - p), 4.0 * std::sqrt(p * (1 - p) / static_cast<double>(total)));
}

TEST(EdgeStream, TwoVertices) {
  const auto s = edge_stream(new_process(2, 4));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].i, 0u);
  EXPECT_EQ(s[0].j, 1u);
}

TEST(EdgeStream, SortedByWeight) {
  const auto s = edge_stream(three_vertex_table());
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ((VertexPair{s[0].i, s[0].j}), (VertexPair{0, 1}));
  EXPECT_EQ((VertexPair{s[1].i, s[1].j}), (VertexPair{1, 2}));
  EXPECT_EQ((VertexPair{s[2].i, s[2].j}), (VertexPair{0, 2}));
}

TEST(EdgeStream, TiesBrokenLexicographically) {
  const auto s = edge_stream(EdgeWeightTable::from_weights(3, {0.5, 0.5, 0.1}));
  EXPECT_EQ((VertexPair{s[0].i, s[0].j}), (VertexPair{1, 2}));
  EXPECT_EQ((VertexPair{s[1].i, s[1].j}), (VertexPair{0, 1}));
  EXPECT_EQ((VertexPair{s[2].i, s[2].j}), (VertexPair{0, 2}));
}

TEST(EdgeStream, PrefixMatchesSnapshot) {
  CounterStream rng(123, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.next_below(30);
    const auto t = new_process(n, rng.next_u64());
    const double p = rng.next_unit();
    const auto stream = edge_stream(t);
    const std::size_t k = prefix_length(stream, p);
    const auto prefix = stream_prefix(n, stream, k, p);
    const auto direct = snapshot(t, p);
    ASSERT_EQ(prefix.edge_count(), direct.edge_count());
    ASSERT_TRUE(std::equal(prefix.adjacency().begin(), prefix.adjacency().end(),
                           direct.adjacency().begin()));
    ASSERT_TRUE(std::equal(prefix.offsets().begin(), prefix.offsets().end(),
                           direct.offsets().begin()));
  }
}

TEST(ResampleEdge, OnlyTargetPairChanges) {
  const auto t = new_process(8, 21);
  const auto r = resample_edge(t, 2, 5, 0);
  for (Vertex i = 0; i < 8; ++i) {
    for (Vertex j = i + 1; j < 8; ++j) {
      if (i == 2 && j == 5) {
        EXPECT_NE(r.weight(i, j), t.weight(i, j));
      } else {
        EXPECT_EQ(r.weight(i, j), t.weight(i, j));
      }
    }
  }
}

TEST(ResampleEdge, ReplicaIndexIsDeterministic) {
  const auto t = new_process(8, 21);
  EXPECT_EQ(resample_edge(t, 1, 3, 4).weight(1, 3), resample_edge(t, 1, 3, 4).weight(1, 3));
  EXPECT_NE(resample_edge(t, 1, 3, 4).weight(1, 3), resample_edge(t, 1, 3, 5).weight(1, 3));
}

TEST(ResampleEdge, RejectsBadPairs) {
  const auto t = new_process(4, 1);
  EXPECT_THROW(resample_edge(t, 2, 2, 0), InvalidArgument);
  EXPECT_THROW(resample_edge(t, 1, 9, 0), InvalidArgument);
}

TEST(ResampleEdge, RedrawIndicatorHasBernoulliVariance) {
  const auto t = new_process(2, 8);
  const double p = 0.3;
  const int draws = 100000;
  double hits = 0.0;
  for (int r = 0; r < draws; ++r) hits += resampled_weight(t, 0, 1, static_cast<std::uint32_t>(r)) < p;
  const double mean = hits / draws;
  const double var = mean * (1.0 - mean) * draws / (draws - 1.0);
  // Standard error of the sample variance of a Bernoulli(p) indicator.
  const double mu4 = p * (1 - p) * (1 - 3 * p * (1 - p));
  const double se = std::sqrt((mu4 - std::pow(p * (1 - p), 2) * (draws - 3.0) / (draws - 1.0)) / draws);
  EXPECT_LT(std::abs(var - 0.21), 3.0 * se);
}
