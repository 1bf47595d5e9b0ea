#pragma once

// Closed-form bounds on ||A_p|| and its top eigenvector with their explicit
// constants. Every evaluator computes its value even when the theorem's
// hypotheses fail; `valid` records whether they hold. All logarithms are
// natural.

#include <optional>
#include <string>

#include "json.hpp"

namespace speclab {

namespace constants {
inline constexpr double kAkvExponent = 32.0;          // P{|Z - EZ| > t} <= 2 exp(-t^2/32)
inline constexpr double kAkvVariance = 16.0;          // Var ||A_p|| <= 16
inline constexpr double kUniformC = 5e8;              // uniform concentration constant
inline constexpr double kUniformExponent = 128.0;
inline constexpr double kBasicSparse = 173.0;         // E||A_{1/n}|| <= 173 sqrt(log n)
inline constexpr double kBvhLogTerm = 84.0;
inline constexpr double kBvhSimplified = 170.0;
inline constexpr double kCentered = 420.0;            // sup ||A_p - EA_p|| <= 420 sqrt(nq)
inline constexpr double kCenteredExponent = 64.0;
inline constexpr double kUnifDeloc = 2896.0;          // ||v_p - 1/sqrt n|| <= 2896/sqrt(nq)
inline constexpr double kWeakDeloc = 11.0;            // ||v_p||_inf <= 11/sqrt n
inline constexpr double kKappa = 2.0 * 835.0 * 835.0;
inline constexpr double kSmallC = 1.0 / 9408.0;
inline constexpr double kLowerTailC = 1.0 / 4704.0;
inline constexpr double kMomentC = 966306.0;
inline constexpr double kMomentCPrime = 1339945.0;
inline constexpr double kLogLogPrefactor = 5.0;
inline constexpr double kLogLogInner = 2848.0;
}  // namespace constants

struct BoundValue {
  double value = 0.0;
  bool valid = true;
  std::optional<double> probability;  // "with probability at least", in [0,1]
  std::string source;
};

void to_json(nlohmann::json& j, const BoundValue& b);

// min(1, 2 exp(-t^2/32)).
BoundValue akv_tail(double t);

// exp(-t^2/128), valid for t >= 2 * 5e8.
BoundValue uniform_tail(double t);

// 173 sqrt(log n), valid for n >= 3.
BoundValue basic_sparse_norm(double n);

struct BvhNorm {
  BoundValue full;        // e^{2/3} (2 sqrt(2np) + 84 sqrt(log n))
  BoundValue simplified;  // 170 sqrt(np)
};
// Expected centered norm, valid for p >= log n / n.
BvhNorm bvh_expected_norm(double n, double p);

// 420 sqrt(nq) with probability 1 - exp(-nq/64); valid for q in [log n/n, 1/2].
BoundValue centered_uniform_bound(double n, double q);

struct LambdaBracket {
  BoundValue lower;  // p(n-1) - sqrt(nq)
  BoundValue upper;  // p(n-1) + 420 sqrt(nq)
};
LambdaBracket lambda_bracket(double n, double p, double q);

// 2896 / sqrt(nq) with probability 1 - 4 exp(-nq/64); valid for n >= 7,
// q in [4 log n / n, 1/2].
BoundValue unif_deloc_bound(double n, double q);

// 11 / sqrt(n); valid for n >= 7 and p >= kappa log^3(n) / n.
BoundValue weak_deloc(double n, double p);

struct MomentRange {
  double upper_tail_k_max;
  double lower_tail_k_max;
  bool upper_empty;  // admissible k lie in (2, k_max]
  bool lower_empty;
};
MomentRange moment_k_max(double n, double p);

enum class TailSide { upper, lower };

// sqrt(C k p) for the upper tail, sqrt(C' k p) for the lower tail.
BoundValue moment_bound(double k, double p, TailSide side);

struct VarianceBound {
  BoundValue moment_form;  // C p; valid when n is given and p >= kappa log^3 n / n
  BoundValue akv_form;     // 16
  double best;             // min of the two
};
VarianceBound variance_bound(double p, std::optional<double> n = std::nullopt);

// Largest t for which the 2^{-t^2/(2Cp)} tail is claimed.
double concentration_t_max(double n, double p);
BoundValue concentration_tail(double n, double p, double t);

struct LogLogBound {
  BoundValue proof_form;  // 5 sqrt(2 log(2848 log n))
  BoundValue intro_form;  // 5 sqrt(16 + 2 log log n)
};
LogLogBound loglog_bound(double n);

// Massart: min(1, 2 exp(-2 m eps^2)).
BoundValue dkw_tail(double m, double eps);
// 4 * integral_0^inf exp(-2t^2) dt.
double dkw_expected_sup();

// Band half-width p(n-1) delta; probability 1 - 2(n-1) exp(-3 delta^2 p(n-1)/8),
// clamped.
BoundValue degree_band(double n, double p, double delta);

struct TreeBounds {
  BoundValue expected_trees;      // C(n,k) k^{k-2} p^{k-1}
  BoundValue large_tree_series;   // sum_{j>k} (en/j^2)(enp)^{j-1}; divergent unless enp < 1
  BoundValue non_forest;          // c^3/(1-c), c = np < 1
};
TreeBounds tree_bounds(double n, long k, double p);

// sqrt(k - 1): top eigenvalue of any forest whose trees have <= k vertices.
double forest_spectral_bound(long k);

// n^{-k/(k-1)}.
double sparse_threshold(double n, long k);

}  // namespace speclab
