#include "speclab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "speclab/errors.hpp"

namespace speclab {
namespace {

using namespace constants;

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

void require(bool ok, const char* message) {
  if (!ok) throw InvalidArgument(message);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

// C(n, k) by a running product; exact enough for the k used here.
double binomial(double n, long k) {
  if (k < 0 || static_cast<double>(k) > n) return 0.0;
  double r = 1.0;
  for (long i = 1; i <= k; ++i) r *= (n - static_cast<double>(k) + static_cast<double>(i)) / static_cast<double>(i);
  return r;
}

}  // namespace

void to_json(nlohmann::json& j, const BoundValue& b) {
  j = nlohmann::json{{"value", b.value}, {"valid", b.valid}, {"source", b.source}};
  j["probability"] = b.probability ? nlohmann::json(*b.probability) : nlohmann::json(nullptr);
}

BoundValue akv_tail(double t) {
  require(t >= 0.0, "akv_tail: t must be >= 0");
  return {std::min(1.0, 2.0 * std::exp(-t * t / kAkvExponent)), true, std::nullopt,
          "AKV tail 2exp(-t^2/32)"};
}

BoundValue uniform_tail(double t) {
  require(t >= 0.0, "uniform_tail: t must be >= 0");
  return {std::exp(-t * t / kUniformExponent), t >= 2.0 * kUniformC, std::nullopt,
          "uniform tail exp(-t^2/128), t >= 2C, C = 5e8"};
}

BoundValue basic_sparse_norm(double n) {
  require(n >= 1.0, "basic_sparse_norm: n must be >= 1");
  return {kBasicSparse * std::sqrt(std::log(n)), n >= 3.0, std::nullopt,
          "E||A_{1/n}|| <= 173 sqrt(log n), n >= 3"};
}

BvhNorm bvh_expected_norm(double n, double p) {
  require(n >= 1.0, "bvh_expected_norm: n must be >= 1");
  require(is_probability(p), "bvh_expected_norm: p must lie in [0,1]");
  const bool valid = p >= std::log(n) / n;
  const double full = std::exp(2.0 / 3.0) * (2.0 * std::sqrt(2.0 * n * p) + kBvhLogTerm * std::sqrt(std::log(n)));
  return {{full, valid, std::nullopt, "E||A_p - EA_p|| <= e^{2/3}(2sqrt(2np) + 84 sqrt(log n)), p >= log n/n"},
          {kBvhSimplified * std::sqrt(n * p), valid, std::nullopt, "E||A_p - EA_p|| <= 170 sqrt(np)"}};
}

BoundValue centered_uniform_bound(double n, double q) {
  require(n >= 1.0, "centered_uniform_bound: n must be >= 1");
  require(is_probability(q), "centered_uniform_bound: q must lie in [0,1]");
  const bool valid = q >= std::log(n) / n && q <= 0.5;
  return {kCentered * std::sqrt(n * q), valid, clamp01(1.0 - std::exp(-n * q / kCenteredExponent)),
          "sup_{p in [q,2q]} ||A_p - EA_p|| <= 420 sqrt(nq), q in [log n/n, 1/2]"};
}

LambdaBracket lambda_bracket(double n, double p, double q) {
  require(n >= 1.0, "lambda_bracket: n must be >= 1");
  require(is_probability(p) && is_probability(q), "lambda_bracket: p, q must lie in [0,1]");
  const bool valid = p >= q && p <= 2.0 * q && q >= std::log(n) / n && q <= 0.5;
  const double root = std::sqrt(n * q);
  const double centre = p * (n - 1.0);
  return {{centre - root, valid, std::nullopt, "lambda_p >= p(n-1) - sqrt(nq)"},
          {centre + kCentered * root, valid, std::nullopt, "lambda_p <= p(n-1) + 420 sqrt(nq)"}};
}

BoundValue unif_deloc_bound(double n, double q) {
  require(n >= 1.0, "unif_deloc_bound: n must be >= 1");
  require(q > 0.0 && q <= 1.0, "unif_deloc_bound: q must lie in (0,1]");
  const bool valid = n >= 7.0 && q >= 4.0 * std::log(n) / n && q <= 0.5;
  return {kUnifDeloc / std::sqrt(n * q), valid,
          clamp01(1.0 - 4.0 * std::exp(-n * q / kCenteredExponent)),
          "sup_{p in [q,2q]} ||v_p - 1/sqrt n||_2 <= 2896/sqrt(nq), n >= 7, q in [4 log n/n, 1/2]"};
}

BoundValue weak_deloc(double n, double p) {
  require(n > 1.0, "weak_deloc: n must be > 1");
  require(p > 0.0 && p <= 1.0, "weak_deloc: p must lie in (0,1]");
  const double log_n = std::log(n);
  const bool valid = n >= 7.0 && p >= kKappa * log_n * log_n * log_n / n;
  const double ratio = std::log(n * p) / log_n;
  const double fail = 4.0 * (n - 1.0) * std::exp(-2.0 * kSmallC * ratio * ratio * (n - 1.0) * p);
  return {kWeakDeloc / std::sqrt(n), valid, clamp01(1.0 - fail),
          "||v_p||_inf <= 11/sqrt n, n >= 7, p >= kappa log^3 n / n, kappa = 2*835^2"};
}

MomentRange moment_k_max(double n, double p) {
  require(n > 1.0, "moment_k_max: n must be > 1");
  require(p > 0.0 && p < 1.0, "moment_k_max: p must lie in (0,1)");
  require(n * p > 1.0, "moment_k_max: requires np > 1");
  const double ratio = std::log(n * p) / std::log(n);
  const double spread = ratio * ratio * (n - 1.0) * p;
  const double upper = (kSmallC * spread - std::log(8.0 * (n - 1.0))) /
                       (std::log(1.0 / p) + std::log(std::pow(11.0, 5) / 4.0));
  const double lower = (kLowerTailC * spread - std::log(4.0 * (n - 1.0))) / std::log(n / 36.0);
  return {upper, lower, !(upper > 2.0), !(lower > 2.0)};
}

BoundValue moment_bound(double k, double p, TailSide side) {
  require(k > 2.0, "moment_bound: k must be > 2");
  require(p > 0.0 && p <= 1.0, "moment_bound: p must lie in (0,1]");
  if (side == TailSide::upper) {
    return {std::sqrt(kMomentC * k * p), true, std::nullopt, "upper-tail k-th moment <= (Ckp)^{1/2}, C = 966306"};
  }
  return {std::sqrt(kMomentCPrime * k * p), true, std::nullopt, "lower-tail k-th moment <= (C'kp)^{1/2}, C' = 1339945"};
}

VarianceBound variance_bound(double p, std::optional<double> n) {
  require(is_probability(p), "variance_bound: p must lie in [0,1]");
  bool valid = true;
  if (n) {
    require(*n > 1.0, "variance_bound: n must be > 1");
    const double log_n = std::log(*n);
    valid = p >= kKappa * log_n * log_n * log_n / *n;
  }
  BoundValue moment{kMomentC * p, valid, std::nullopt, "Var ||A_p|| <= Cp, C = 966306, p >= kappa log^3 n / n"};
  BoundValue akv{kAkvVariance, true, std::nullopt, "Var ||A_p|| <= 16"};
  return {moment, akv, std::min(moment.value, akv.value)};
}

double concentration_t_max(double n, double p) {
  require(n > 1.0, "concentration_t_max: n must be > 1");
  require(p > 0.0 && p <= 1.0, "concentration_t_max: p must lie in (0,1]");
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  return 2.0 * std::sqrt(kMomentC * kSmallC) * p * std::sqrt(n - 1.0) * std::log(n * p) /
         (std::log(n) * std::log(1.0 / p));
}

BoundValue concentration_tail(double n, double p, double t) {
  require(t > 0.0, "concentration_tail: t must be > 0");
  const double t_max = concentration_t_max(n, p);
  return {std::exp2(-t * t / (2.0 * kMomentC * p)), t <= t_max, std::nullopt,
          "P{|Z - EZ| >= t} <= 2^{-t^2/(2Cp)}, 0 < t <= 2 sqrt(Cc) p sqrt(n-1) log(np)/(log n log(1/p))"};
}

LogLogBound loglog_bound(double n) {
  require(n >= std::numbers::e, "loglog_bound: n must be >= e");
  const bool valid = n >= 3.0;
  const double log_n = std::log(n);
  return {{kLogLogPrefactor * std::sqrt(2.0 * std::log(kLogLogInner * log_n)), valid, std::nullopt,
           "E sup_{p <= 64 log n/n} |lambda_p - E lambda_p| <= 5 sqrt(2 log(2848 log n))"},
          {kLogLogPrefactor * std::sqrt(16.0 + 2.0 * std::log(log_n)), valid, std::nullopt,
           "E sup_{p <= 64 log n/n} |lambda_p - E lambda_p| <= 5 sqrt(16 + 2 log log n)"}};
}

BoundValue dkw_tail(double m, double eps) {
  require(m >= 1.0, "dkw_tail: m must be >= 1");
  require(eps >= 0.0, "dkw_tail: eps must be >= 0");
  return {std::min(1.0, 2.0 * std::exp(-2.0 * m * eps * eps)), true, std::nullopt,
          "Massart DKW: P{sup|F_m - F| > eps} <= 2 exp(-2 m eps^2)"};
}

double dkw_expected_sup() { return std::sqrt(2.0 * std::numbers::pi); }

BoundValue degree_band(double n, double p, double delta) {
  require(n >= 1.0, "degree_band: n must be >= 1");
  require(is_probability(p), "degree_band: p must lie in [0,1]");
  require(delta > 0.0 && delta <= 1.0, "degree_band: delta must lie in (0,1]");
  const double mean = p * (n - 1.0);
  const double fail = 2.0 * (n - 1.0) * std::exp(-3.0 * delta * delta * mean / 8.0);
  return {mean * delta, true, 1.0 - std::min(1.0, fail),
          "max_i |D_i - p(n-1)| <= p(n-1) delta w.p. >= 1 - 2(n-1) exp(-3 delta^2 p(n-1)/8)"};
}

TreeBounds tree_bounds(double n, long k, double p) {
  require(k >= 2, "tree_bounds: k must be >= 2");
  require(n >= 1.0, "tree_bounds: n must be >= 1");
  require(is_probability(p), "tree_bounds: p must lie in [0,1]");
  const double kd = static_cast<double>(k);
  TreeBounds out;
  out.expected_trees = {binomial(n, k) * std::pow(kd, kd - 2.0) * std::pow(p, kd - 1.0), true,
                        std::nullopt, "E T_k <= C(n,k) k^{k-2} p^{k-1}"};

  const double growth = std::numbers::e * n * p;
  out.large_tree_series.source = "P{trees with > k vertices} <= sum_{j>k} (en/j^2)(enp)^{j-1}";
  if (growth < 1.0) {
    double total = 0.0;
    double power = std::pow(growth, kd);  // (enp)^{j-1} at j = k + 1
    for (long j = k + 1;; ++j) {
      const double jd = static_cast<double>(j);
      const double term = std::numbers::e * n / (jd * jd) * power;
      total += term;
      if (term < 1e-15 * total || term == 0.0) break;
      power *= growth;
    }
    out.large_tree_series.value = total;
    out.large_tree_series.valid = true;
  } else {
    out.large_tree_series.value = std::numeric_limits<double>::infinity();
    out.large_tree_series.valid = false;
  }

  const double c = n * p;
  out.non_forest.source = "P{not a forest} <= c^3/(1-c), p = c/n, c < 1";
  if (c < 1.0) {
    out.non_forest.value = c * c * c / (1.0 - c);
    out.non_forest.valid = true;
  } else {
    out.non_forest.value = std::numeric_limits<double>::infinity();
    out.non_forest.valid = false;
  }
  return out;
}

double forest_spectral_bound(long k) {
  require(k >= 1, "forest_spectral_bound: k must be >= 1");
  return std::sqrt(static_cast<double>(k - 1));
}

double sparse_threshold(double n, long k) {
  require(k >= 2, "sparse_threshold: k must be >= 2");
  require(n >= 1.0, "sparse_threshold: n must be >= 1");
  const double kd = static_cast<double>(k);
  return std::pow(n, -kd / (kd - 1.0));
}

}  // namespace speclab
