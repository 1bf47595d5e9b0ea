#pragma once

// How close the top eigenvector is to the flat vector 1/sqrt(n).

#include <cstddef>
#include <span>
#include <vector>

#include "speclab/graph_process.hpp"

namespace speclab {

struct DelocStats {
  double linf_scaled;  // sqrt(n) ||v||_inf, in [1, sqrt(n)]
  double l2_dev;       // ||v - 1/sqrt(n)||_2
  double alignment;    // alpha = <1/sqrt(n), v>
  double beta;         // sqrt(1 - alpha^2)
};

// v must be unit length (1e-8) and sign-normalized (<v, 1> >= 0).
DelocStats deloc_stats(std::span<const double> v);

struct CompressionSchedule {
  long ell;      // floor(21 ln n / ln(np))
  double delta;  // ln(np) / (42 ln n)
};

// Power count and degree band used by the l_inf argument. Requires np > 1.
CompressionSchedule compression_schedule(double n, double p);

struct PowerCompression {
  std::vector<double> w;     // (A/lambda)^ell 1/sqrt(n), possibly rescaled
  double linf_scaled;        // sqrt(n) ||(A/lambda)^ell 1/sqrt(n)||_inf, unscaled
  double rescale_factor;     // w * rescale_factor is the true vector; 1 if never rescaled
};

// ell products with A/lambda, no normalization between steps. If ||w||_2
// ever exceeds 1e6 the stored vector is scaled down and the factor is
// recorded; linf_scaled always refers to the true vector.
PowerCompression power_compression(const GraphSnapshot& g, double lambda, long ell);

}  // namespace speclab
