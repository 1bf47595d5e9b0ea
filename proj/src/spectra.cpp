#include "speclab/spectra.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "speclab/errors.hpp"
#include "speclab/rng.hpp"

namespace speclab {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void scale(std::span<double> a, double c) {
  for (double& x : a) x *= c;
}

double sum(std::span<const double> a) { return std::accumulate(a.begin(), a.end(), 0.0); }

std::uint64_t snapshot_seed(const GraphSnapshot& g) {
  return replicate_seed(0x5EEDC0DEull ^ g.n(), g.edge_count());
}

}  // namespace

void SolverSettings::validate(std::size_t n) const {
  if (!(tol > 0.0)) throw InvalidArgument("solver tol must be > 0");
  if (iteration_limit(n) < 1) throw InvalidArgument("solver max_iter must be >= 1");
  if (!std::isfinite(shift)) throw InvalidArgument("solver shift must be finite");
  if (!start.empty() && start.size() != n) {
    throw InvalidArgument("start vector has length " + std::to_string(start.size()) +
                          ", expected " + std::to_string(n));
  }
}

void adjacency_apply(const GraphSnapshot& g, std::span<const double> x, std::span<double> y) {
  const auto offsets = g.offsets();
  const auto adj = g.adjacency();
  const std::size_t n = g.n();
  for (std::size_t v = 0; v < n; ++v) {
    double s = 0.0;
    for (std::size_t k = offsets[v]; k < offsets[v + 1]; ++k) s += x[adj[k]];
    y[v] = s;
  }
}

SymmetricOperator adjacency_operator(const GraphSnapshot& g) {
  return {g.n(), [&g](std::span<const double> x, std::span<double> y) { adjacency_apply(g, x, y); }};
}

SymmetricOperator adjacency_without_edge(const GraphSnapshot& g, Vertex i, Vertex j) {
  if (!g.has_edge(i, j)) throw InvalidArgument("adjacency_without_edge: edge not present");
  return {g.n(), [&g, i, j](std::span<const double> x, std::span<double> y) {
            adjacency_apply(g, x, y);
            y[i] -= x[j];
            y[j] -= x[i];
          }};
}

SymmetricOperator centered_operator(const GraphSnapshot& g, double p) {
  return {g.n(), [&g, p](std::span<const double> x, std::span<double> y) {
            adjacency_apply(g, x, y);
            const double total = sum(x);
            for (std::size_t k = 0; k < x.size(); ++k) y[k] -= p * (total - x[k]);
          }};
}

SymmetricOperator rank_one_shifted_operator(const GraphSnapshot& g, double t) {
  const double c = g.n() ? t / static_cast<double>(g.n()) : 0.0;
  return {g.n(), [&g, c](std::span<const double> x, std::span<double> y) {
            adjacency_apply(g, x, y);
            const double shift = c * sum(x);
            for (double& v : y) v -= shift;
          }};
}

void sign_normalize(std::span<double> v) {
  const double s = sum(v);
  bool flip = s < 0.0;
  if (s == 0.0) {
    const auto it = std::find_if(v.begin(), v.end(), [](double x) { return x != 0.0; });
    flip = it != v.end() && *it < 0.0;
  }
  if (flip) scale(v, -1.0);
}

EigenPair top_eigenpair(const SymmetricOperator& op, const SolverSettings& settings) {
  const std::size_t n = op.dim();
  settings.validate(n);
  if (n == 0) throw InvalidArgument("top_eigenpair: empty operator");

  std::vector<double> x(n), y(n);
  if (settings.start.empty()) {
    std::fill(x.begin(), x.end(), 1.0 / std::sqrt(static_cast<double>(n)));
  } else {
    x = settings.start;
    const double nx = norm2(x);
    if (!(nx > 0.0) || !std::isfinite(nx)) throw InvalidArgument("start vector must be nonzero");
    scale(x, 1.0 / nx);
  }

  EigenPair best;
  best.residual = std::numeric_limits<double>::infinity();
  const std::size_t limit = settings.iteration_limit(n);
  for (std::size_t it = 1; it <= limit; ++it) {
    op(x, y);
    const double theta = dot(x, y);
    double r2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double d = y[k] - theta * x[k];
      r2 += d * d;
    }
    const double residual = std::sqrt(r2);
    if (residual <= settings.tol * std::max(1.0, std::abs(theta))) {
      sign_normalize(x);
      return {theta, std::move(x), residual, it};
    }
    if (residual < best.residual) best = {theta, x, residual, it};

    for (std::size_t k = 0; k < n; ++k) y[k] += settings.shift * x[k];
    const double ny = norm2(y);
    if (!(ny > 0.0)) break;
    for (std::size_t k = 0; k < n; ++k) x[k] = y[k] / ny;
  }
  sign_normalize(best.vector);
  throw SolverError("power iteration did not reach tol " + std::to_string(settings.tol) +
                        " within " + std::to_string(limit) + " iterations (best residual " +
                        std::to_string(best.residual) + ")",
                    std::move(best));
}

EigenPair top_eigenpair(const GraphSnapshot& g, const SolverSettings& settings) {
  if (g.n() == 0) throw InvalidArgument("top_eigenpair: graph has no vertices");
  settings.validate(g.n());
  if (g.edge_count() == 0) {
    EigenPair e;
    e.vector.assign(g.n(), 0.0);
    e.vector[0] = 1.0;
    return e;
  }
  const auto op = adjacency_operator(g);
  try {
    return top_eigenpair(op, settings);
  } catch (const SolverError& stalled) {
    SolverSettings refine = settings;
    refine.start = stalled.best().vector;
    auto pair = top_eigenpair_lanczos(op, refine);
    pair.iterations += settings.iteration_limit(g.n());
    return pair;
  }
}

namespace {

enum class Extreme { largest, magnitude };

struct LanczosOutcome {
  double value = 0.0;
  std::vector<double> vector;  // filled only when requested
  double residual = std::numeric_limits<double>::infinity();
  std::size_t products = 0;
  bool converged = false;
};

// Lanczos with full reorthogonalization (two classical Gram-Schmidt passes)
// and explicit restarts. `start` must be unit length.
LanczosOutcome lanczos(const SymmetricOperator& op, std::vector<double> start, double tol,
                       std::size_t limit, Extreme which, bool want_vector) {
  const std::size_t n = op.dim();
  const std::size_t krylov_max = std::min<std::size_t>(n, which == Extreme::largest ? 40 : 80);

  LanczosOutcome best;
  std::vector<double> basis;  // krylov_max rows of length n
  basis.reserve(krylov_max * n);
  std::vector<double> w(n), ritz(n), aritz(n);
  std::vector<double> alpha, beta;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;

  auto row = [&](std::size_t k) { return std::span<double>(basis.data() + k * n, n); };
  auto combine = [&](Eigen::Index col, std::size_t rows, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t c = 0; c < rows; ++c) {
      const double coef = tri.eigenvectors()(static_cast<Eigen::Index>(c), col);
      const auto q = row(c);
      for (std::size_t t = 0; t < n; ++t) out[t] += coef * q[t];
    }
  };

  while (true) {
    basis.assign(start.begin(), start.end());
    alpha.clear();
    beta.clear();
    std::size_t k = 0;
    Eigen::Index idx = 0;
    bool stop = false;
    bool invariant = false;
    for (;; ++k) {
      op(row(k), w);
      ++best.products;
      const auto q = row(k);
      const double a = dot(q, w);
      for (std::size_t t = 0; t < n; ++t) {
        w[t] -= a * q[t];
        if (k > 0) w[t] -= beta[k - 1] * basis[(k - 1) * n + t];
      }
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t r = 0; r <= k; ++r) {
          const auto qr = row(r);
          const double c = dot(qr, w);
          for (std::size_t t = 0; t < n; ++t) w[t] -= c * qr[t];
        }
      }
      const double b = norm2(w);
      alpha.push_back(a);

      Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), static_cast<Eigen::Index>(alpha.size()));
      Eigen::VectorXd sub = Eigen::Map<Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
      tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      const auto& theta = tri.eigenvalues();
      const Eigen::Index last = theta.size() - 1;
      idx = (which == Extreme::largest || std::abs(theta[last]) >= std::abs(theta[0])) ? last : 0;
      const double value = which == Extreme::largest ? theta[idx] : std::abs(theta[idx]);
      const double estimate = b * std::abs(tri.eigenvectors()(last, idx));
      const double scale_ref = std::max(1.0, std::abs(value));
      if (!want_vector && estimate < best.residual) {
        best.residual = estimate;
        best.value = value;
      }
      invariant = b <= 1e-14 * scale_ref || k + 1 == n;
      if (estimate <= tol * scale_ref || invariant) {
        stop = true;
        break;
      }
      if (best.products >= limit || k + 1 == krylov_max) break;
      beta.push_back(b);
      for (double& v : w) v /= b;
      basis.insert(basis.end(), w.begin(), w.end());
    }

    const std::size_t rows = k + 1;
    if (!want_vector) {
      if (stop) {
        best.converged = true;
        return best;
      }
      if (best.products >= limit) return best;
      // Restart from the sum of the two extreme Ritz vectors so that neither
      // end of the spectrum is dropped.
      std::vector<double> tmp(n);
      combine(0, rows, start);
      combine(static_cast<Eigen::Index>(rows) - 1, rows, tmp);
      for (std::size_t t = 0; t < n; ++t) start[t] += tmp[t];
    } else {
      combine(idx, rows, ritz);
      const double nr = norm2(ritz);
      scale(ritz, 1.0 / nr);
      op(ritz, aritz);
      ++best.products;
      const double value = dot(ritz, aritz);
      double r2 = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        const double d = aritz[t] - value * ritz[t];
        r2 += d * d;
      }
      const double residual = std::sqrt(r2);
      if (residual < best.residual) {
        best.residual = residual;
        best.value = value;
        best.vector = ritz;
      }
      if (residual <= tol * std::max(1.0, std::abs(value)) || (invariant && stop)) {
        best.converged = residual <= tol * std::max(1.0, std::abs(value));
        return best;
      }
      if (best.products >= limit) return best;
      start = ritz;
    }
    const double ns = norm2(start);
    if (!(ns > 0.0)) return best;
    scale(start, 1.0 / ns);
  }
}

std::vector<double> unit_start(const SolverSettings& settings, std::size_t n) {
  std::vector<double> x;
  if (settings.start.empty()) {
    x.assign(n, 1.0 / std::sqrt(static_cast<double>(n)));
  } else {
    x = settings.start;
    const double nx = norm2(x);
    if (!(nx > 0.0) || !std::isfinite(nx)) throw InvalidArgument("start vector must be nonzero");
    scale(x, 1.0 / nx);
  }
  return x;
}

}  // namespace

EigenPair top_eigenpair_lanczos(const SymmetricOperator& op, const SolverSettings& settings) {
  const std::size_t n = op.dim();
  settings.validate(n);
  if (n == 0) throw InvalidArgument("top_eigenpair_lanczos: empty operator");
  const std::size_t limit = settings.iteration_limit(n);
  auto out = lanczos(op, unit_start(settings, n), settings.tol, limit, Extreme::largest, true);
  EigenPair pair{out.value, std::move(out.vector), out.residual, out.products};
  if (pair.vector.empty()) pair.vector = unit_start(settings, n);
  sign_normalize(pair.vector);
  if (!out.converged) {
    throw SolverError("Lanczos did not reach tol " + std::to_string(settings.tol) + " within " +
                          std::to_string(limit) + " products",
                      std::move(pair));
  }
  return pair;
}

double spectral_norm(const SymmetricOperator& op, const SolverSettings& settings,
                     std::uint64_t start_seed) {
  const std::size_t n = op.dim();
  settings.validate(n);
  if (n == 0) return 0.0;

  std::vector<double> start(n);
  CounterStream rng(start_seed, 0x4C414E43u);  // "LANC"
  for (double& v : start) v = 2.0 * rng.next_unit() - 1.0;
  scale(start, 1.0 / norm2(start));

  const std::size_t limit = settings.iteration_limit(n);
  auto out = lanczos(op, std::move(start), settings.tol, limit, Extreme::magnitude, false);
  if (!out.converged) {
    EigenPair best{out.value, {}, out.residual, out.products};
    throw SolverError("Lanczos did not reach tol " + std::to_string(settings.tol) + " within " +
                          std::to_string(limit) + " products",
                      std::move(best));
  }
  return out.value;
}

double centered_norm(const GraphSnapshot& g, double p, const SolverSettings& settings) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("centered_norm: p must lie in [0,1]");
  return spectral_norm(centered_operator(g, p), settings, snapshot_seed(g));
}

double shifted_norm(const GraphSnapshot& g, double t, const SolverSettings& settings) {
  if (!std::isfinite(t)) throw InvalidArgument("shifted_norm: t must be finite");
  return spectral_norm(rank_one_shifted_operator(g, t), settings, snapshot_seed(g));
}

double quadratic_form_ones(const GraphSnapshot& g) {
  if (g.n() == 0) return 0.0;
  return 2.0 * static_cast<double>(g.edge_count()) / static_cast<double>(g.n());
}

std::vector<double> dense_adjacency(const GraphSnapshot& g) {
  const std::size_t n = g.n();
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (Vertex j : g.neighbors(static_cast<Vertex>(i))) a[i * n + j] = 1.0;
  }
  return a;
}

std::vector<double> jacobi_eigenvalues(std::vector<double> a, std::size_t n) {
  if (a.size() != n * n) throw InvalidArgument("jacobi_eigenvalues: matrix size mismatch");
  auto at = [&](std::size_t r, std::size_t c) -> double& { return a[r * n + c]; };
  double frob = 0.0;
  for (double v : a) frob += v * v;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = r + 1; c < n; ++c) off += at(r, c) * at(r, c);
    if (off <= 1e-30 * std::max(frob, 1e-300)) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(k, p);
          const double akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(p, k);
          const double aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t k = 0; k < n; ++k) eig[k] = at(k, k);
  std::sort(eig.begin(), eig.end(), std::greater<>());
  return eig;
}

std::vector<double> dense_spectrum_oracle(const GraphSnapshot& g) {
  if (g.n() > kDenseOracleMaxN) {
    throw InvalidArgument("dense_spectrum_oracle is limited to n <= 64");
  }
  return jacobi_eigenvalues(dense_adjacency(g), g.n());
}

}  // namespace speclab
