#include <gtest/gtest.h>

#include <cmath>

#include "speclab/deloc.hpp"
#include "speclab/errors.hpp"
#include "speclab/graph_process.hpp"
#include "speclab/rng.hpp"
#include "speclab/spectra.hpp"

using namespace speclab;

TEST(DelocStats, FlatVector) {
  const std::vector<double> v(16, 0.25);
  const auto d = deloc_stats(v);
  EXPECT_NEAR(d.linf_scaled, 1.0, 1e-15);
  EXPECT_NEAR(d.l2_dev, 0.0, 1e-15);
  EXPECT_NEAR(d.alignment, 1.0, 1e-15);
  EXPECT_NEAR(d.beta, 0.0, 1e-7);
}

TEST(DelocStats, BasisVector) {
  std::vector<double> v(9, 0.0);
  v[0] = 1.0;
  const auto d = deloc_stats(v);
  EXPECT_NEAR(d.linf_scaled, 3.0, 1e-15);
  EXPECT_NEAR(d.alignment, 1.0 / 3.0, 1e-15);
}

TEST(DelocStats, StarCenterEntry) {
  for (std::size_t leaves : {3u, 8u, 15u}) {
    std::vector<VertexPair> e;
    for (Vertex i = 1; i <= leaves; ++i) e.push_back({0, i});
    const auto g = GraphSnapshot::from_edges(leaves + 1, 0.5, e);
    const auto d = deloc_stats(top_eigenpair(g).vector);
    EXPECT_NEAR(d.linf_scaled, std::sqrt((leaves + 1) / 2.0), 1e-8);
  }
}

TEST(DelocStats, Invariants) {
  CounterStream rng(3, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.next_below(60);
    const auto g = snapshot(new_process(n, rng.next_u64()), rng.next_unit());
    const auto d = deloc_stats(top_eigenpair(g).vector);
    EXPECT_GE(d.linf_scaled, 1.0 - 1e-12);
    EXPECT_LE(d.linf_scaled, std::sqrt(static_cast<double>(n)) + 1e-12);
    EXPECT_NEAR(d.alignment * d.alignment + d.beta * d.beta, 1.0, 1e-10);
    EXPECT_NEAR(d.l2_dev * d.l2_dev, 2.0 * (1.0 - d.alignment), 1e-10);
  }
}

TEST(DelocStats, Preconditions) {
  EXPECT_THROW(deloc_stats(std::vector<double>{1.0, 1.0}), InvalidArgument);
  EXPECT_THROW(deloc_stats(std::vector<double>{-0.6, -0.8}), InvalidArgument);
  EXPECT_THROW(deloc_stats(std::vector<double>{}), InvalidArgument);
}

TEST(CompressionSchedule, Formulas) {
  const double n = std::exp(10.0);
  const auto s = compression_schedule(n, std::exp(5.0) / n);
  EXPECT_EQ(s.ell, 42);
  EXPECT_NEAR(s.delta, 1.0 / 84.0, 1e-15);
  const auto full = compression_schedule(500.0, 1.0);
  EXPECT_EQ(full.ell, 21);
  EXPECT_NEAR(full.delta, 1.0 / 42.0, 1e-15);
}

TEST(CompressionSchedule, ProductAtMostHalf) {
  for (double n : {10.0, 100.0, 1e4, 1e6}) {
    for (double p = 1.5 / n; p <= 1.0; p *= 1.7) {
      const auto s = compression_schedule(n, p);
      EXPECT_LE(s.ell * s.delta, 0.5 + 1e-15);
      EXPECT_GE(s.ell, 1);
    }
  }
}

TEST(CompressionSchedule, RejectsSubcritical) {
  EXPECT_THROW(compression_schedule(100.0, 0.01), InvalidArgument);
  EXPECT_THROW(compression_schedule(100.0, 0.001), InvalidArgument);
}

TEST(PowerCompression, IdentityPower) {
  const auto g = snapshot(new_process(10, 1), 0.5);
  const auto pc = power_compression(g, 3.0, 0);
  EXPECT_NEAR(pc.linf_scaled, 1.0, 1e-15);
  for (double x : pc.w) EXPECT_NEAR(x, 1.0 / std::sqrt(10.0), 1e-15);
}

TEST(PowerCompression, CompleteGraphFixedPoint) {
  const auto g = snapshot(new_process(12, 1), 1.0);
  const auto pc = power_compression(g, 11.0, 7);
  for (double x : pc.w) EXPECT_NEAR(x, 1.0 / std::sqrt(12.0), 1e-14);
}

TEST(PowerCompression, MatchesDenseCube) {
  const std::size_t n = 16;
  const auto g = snapshot(new_process(n, 44), 0.4);
  const double lambda = top_eigenpair(g).value;
  const auto a = dense_adjacency(g);
  std::vector<double> w(n, 1.0 / std::sqrt(16.0)), next(n);
  for (int step = 0; step < 3; ++step) {
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = 0.0;
      for (std::size_t j = 0; j < n; ++j) next[i] += a[i * n + j] * w[j] / lambda;
    }
    w = next;
  }
  const auto pc = power_compression(g, lambda, 3);
  double linf = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_NEAR(pc.w[i] * pc.rescale_factor, w[i], 1e-9);
    linf = std::max(linf, std::abs(w[i]));
  }
  EXPECT_NEAR(pc.linf_scaled, 4.0 * linf, 1e-9);
}

TEST(PowerCompression, ConvergesTowardPerronVector) {
  const auto g = snapshot(new_process(50, 9), 0.3);
  const auto top = top_eigenpair(g);
  double previous = 2.0;
  for (long ell : {1, 2, 4, 8}) {
    const auto pc = power_compression(g, top.value, ell);
    double dot = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < 50; ++i) {
      dot += pc.w[i] * top.vector[i];
      norm += pc.w[i] * pc.w[i];
    }
    const double angle = std::acos(std::min(1.0, dot / std::sqrt(norm)));
    EXPECT_LE(angle, previous + 1e-12);
    previous = angle;
  }
}

TEST(PowerCompression, Preconditions) {
  const auto g = snapshot(new_process(5, 1), 0.5);
  EXPECT_THROW(power_compression(g, 0.0, 1), InvalidArgument);
  EXPECT_THROW(power_compression(g, 1.0, -1), InvalidArgument);
}
