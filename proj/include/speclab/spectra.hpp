#pragma once

// Top eigenpairs and spectral norms of adjacency matrices, matrix-free.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "speclab/graph_process.hpp"

namespace speclab {

struct SolverSettings {
  double tol = 1e-10;
  std::size_t max_iter = 0;  // 0 selects 10 n + 1000
  double shift = 1.0;
  std::vector<double> start;  // empty: the flat vector 1/sqrt(n)

  std::size_t iteration_limit(std::size_t n) const { return max_iter ? max_iter : 10 * n + 1000; }
  void validate(std::size_t n) const;
};

// `vector` is unit length with <vector, 1> >= 0. `residual` is
// ||A v - value v||_2 for exactly the returned vector.
struct EigenPair {
  double value = 0.0;
  std::vector<double> vector;
  double residual = 0.0;
  std::size_t iterations = 0;
};

// Raised when an iteration hits its limit. Carries the iterate with the
// smallest residual seen.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, EigenPair best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const EigenPair& best() const { return best_; }

 private:
  EigenPair best_;
};

// A symmetric linear map y = M x on R^dim.
class SymmetricOperator {
 public:
  using Apply = std::function<void(std::span<const double>, std::span<double>)>;

  SymmetricOperator(std::size_t dim, Apply apply) : dim_(dim), apply_(std::move(apply)) {}
  std::size_t dim() const { return dim_; }
  void operator()(std::span<const double> x, std::span<double> y) const { apply_(x, y); }

 private:
  std::size_t dim_;
  Apply apply_;
};

// y = A x for the snapshot's adjacency matrix.
void adjacency_apply(const GraphSnapshot& g, std::span<const double> x, std::span<double> y);

// The operators below keep a reference to `g`; it must outlive them.
SymmetricOperator adjacency_operator(const GraphSnapshot& g);
// A with the single edge (i, j) deleted; the edge must be present.
SymmetricOperator adjacency_without_edge(const GraphSnapshot& g, Vertex i, Vertex j);
// A - E[A_p] = A - p (J - I).
SymmetricOperator centered_operator(const GraphSnapshot& g, double p);
// A - (t/n) J.
SymmetricOperator rank_one_shifted_operator(const GraphSnapshot& g, double t);

// Largest eigenpair by power iteration on M + shift I. Meant for
// entrywise-nonnegative M, where the top eigenvalue is also the spectral
// radius.
EigenPair top_eigenpair(const SymmetricOperator& op, const SolverSettings& settings);

// Largest eigenpair by Lanczos with full reorthogonalization, started from
// settings.start. Converges in far fewer products than power iteration when
// the start is already close, so it serves warm-started re-solves.
EigenPair top_eigenpair_lanczos(const SymmetricOperator& op, const SolverSettings& settings);

// lambda_p = ||A_p|| and the sign-normalized Perron vector, by shifted power
// iteration. If that stalls (near-tied components), the best iterate is
// refined by Lanczos before giving up. The empty graph returns value 0 with
// vector e_1.
EigenPair top_eigenpair(const GraphSnapshot& g, const SolverSettings& settings = {});

// max |eigenvalue| of a symmetric operator (Lanczos with full
// reorthogonalization and explicit restarts). `start_seed` picks the
// pseudo-random start vector.
double spectral_norm(const SymmetricOperator& op, const SolverSettings& settings,
                     std::uint64_t start_seed);

// ||A_p - E A_p||.
double centered_norm(const GraphSnapshot& g, double p, const SolverSettings& settings = {});

// ||A - t (1/sqrt n)(1/sqrt n)^T||; with t = np it dominates |lambda_i|, i >= 2.
double shifted_norm(const GraphSnapshot& g, double t, const SolverSettings& settings = {});

// (1/sqrt n)^T A (1/sqrt n) = 2 |E| / n.
double quadratic_form_ones(const GraphSnapshot& g);

// Flip v so that <v, 1> >= 0; ties resolved by the first nonzero entry.
void sign_normalize(std::span<double> v);

// Row-major dense adjacency matrix.
std::vector<double> dense_adjacency(const GraphSnapshot& g);

// All eigenvalues of a dense symmetric row-major matrix, descending, by the
// cyclic Jacobi rotation method.
std::vector<double> jacobi_eigenvalues(std::vector<double> a, std::size_t n);

inline constexpr std::size_t kDenseOracleMaxN = 64;

// Full adjacency spectrum, descending. Test oracle; n <= 64.
std::vector<double> dense_spectrum_oracle(const GraphSnapshot& g);

}  // namespace speclab
