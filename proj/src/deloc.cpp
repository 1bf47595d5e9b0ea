#include "speclab/deloc.hpp"

#include <algorithm>
#include <cmath>

#include "speclab/errors.hpp"
#include "speclab/spectra.hpp"

namespace speclab {

DelocStats deloc_stats(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) throw InvalidArgument("deloc_stats: empty vector");
  double norm_sq = 0.0, total = 0.0, linf = 0.0;
  for (double x : v) {
    norm_sq += x * x;
    total += x;
    linf = std::max(linf, std::abs(x));
  }
  if (std::abs(std::sqrt(norm_sq) - 1.0) > 1e-8) throw InvalidArgument("deloc_stats: v must be a unit vector");
  if (total < 0.0) throw InvalidArgument("deloc_stats: v must satisfy <v, 1> >= 0");

  const double root_n = std::sqrt(static_cast<double>(n));
  const double flat = 1.0 / root_n;
  double dev_sq = 0.0;
  for (double x : v) dev_sq += (x - flat) * (x - flat);
  const double alpha = std::min(1.0, total / root_n);
  return {root_n * linf, std::sqrt(dev_sq), alpha, std::sqrt(std::max(0.0, 1.0 - alpha * alpha))};
}

CompressionSchedule compression_schedule(double n, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("compression_schedule: p must lie in [0,1]");
  if (!(n * p > 1.0)) throw InvalidArgument("compression_schedule: requires np > 1");
  const double log_n = std::log(n);
  const double log_np = std::log(n * p);
  const double ratio = 21.0 * log_n / log_np;
  // ratio is often an integer in exact arithmetic (np = n, np = sqrt(n));
  // absorb the last-ulp error before flooring.
  double ell = std::floor(ratio);
  if (std::abs(ratio - std::round(ratio)) <= 1e-12 * ratio) ell = std::round(ratio);
  return {static_cast<long>(ell), log_np / (42.0 * log_n)};
}

PowerCompression power_compression(const GraphSnapshot& g, double lambda, long ell) {
  if (!(lambda > 0.0)) throw InvalidArgument("power_compression: lambda must be > 0");
  if (ell < 0) throw InvalidArgument("power_compression: ell must be >= 0");
  const std::size_t n = g.n();
  const double root_n = std::sqrt(static_cast<double>(n));
  std::vector<double> w(n, 1.0 / root_n), next(n);
  double factor = 1.0;
  for (long step = 0; step < ell; ++step) {
    adjacency_apply(g, w, next);
    double norm_sq = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      w[k] = next[k] / lambda;
      norm_sq += w[k] * w[k];
    }
    const double norm = std::sqrt(norm_sq);
    if (norm > 1e6) {
      for (double& x : w) x /= norm;
      factor *= norm;
    }
  }
  double linf = 0.0;
  for (double x : w) linf = std::max(linf, std::abs(x));
  return {std::move(w), root_n * linf * factor, factor};
}

}  // namespace speclab
