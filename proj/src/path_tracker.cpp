#include "path_tracker.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "speclab/errors.hpp"

namespace speclab::detail {
namespace {

constexpr Eigen::Index kMaxWidth = 16;
constexpr Eigen::Index kKeepOnRestart = 3;
constexpr std::size_t kRefreshEvery = 64;
constexpr int kSparseBlock = 3;
// Switch from adjacency lists to a dense matrix once the average degree makes
// the dense product cheaper.
constexpr std::size_t kDenseMaxN = 2048;
constexpr std::size_t kDenseEntriesPerVertex = 32;

using Small = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxWidth, kMaxWidth>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxWidth, 1>;

// Top eigenpair of a small symmetric h by inverse iteration from the guess y.
// Returns false unless a Cholesky factorization of sigma I - h, sigma just
// above theta, certifies that theta is the largest eigenvalue.
bool top_small(const Small& h, SmallVec& y, double& theta) {
  const Eigen::Index w = h.rows();
  y.normalize();
  SmallVec hy;
  for (int it = 0; it < 8; ++it) {
    hy.noalias() = h * y;
    theta = y.dot(hy);
    const double scale = std::max(1.0, std::abs(theta));
    if ((hy - theta * y).norm() <= 1e-15 * scale) break;
    Small shifted = h;
    shifted.diagonal().array() -= theta * (1.0 + 1e-15);
    const SmallVec z = shifted.partialPivLu().solve(y);
    const double nz = z.norm();
    if (!std::isfinite(nz) || nz == 0.0) break;
    y = z / nz;
  }
  hy.noalias() = h * y;
  theta = y.dot(hy);
  Small gap = -h;
  gap.diagonal().array() += theta + 1e-12 * std::max(1.0, std::abs(theta));
  Eigen::LLT<Small> llt(gap);
  return llt.info() == Eigen::Success && w > 0;
}

}  // namespace

PathTracker::PathTracker(std::size_t n, const SolverSettings& settings)
    : n_(n), tol_(settings.tol), limit_(settings.iteration_limit(n)), lists_(n), parent_(n),
      comp_edges_(n, 0) {
  if (n == 0) throw InvalidArgument("PathTracker: n must be >= 1");
  settings.validate(n);
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  x_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (Eigen::VectorXd* v : {&unit_, &unit_image_, &x_work_, &ax_work_, &r_work_, &ar_work_})
    v->resize(static_cast<Eigen::Index>(n));
  x_[0] = 1.0;
  ax_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  const auto rows = static_cast<Eigen::Index>(n);
  const Eigen::Index cols = std::min<Eigen::Index>(kMaxWidth, rows);
  basis_.resize(rows, cols);
  images_.resize(rows, cols);
  projected_.resize(cols, cols);
}

std::size_t PathTracker::find(std::size_t v) {
  std::size_t root = v;
  while (parent_[root] != root) root = parent_[root];
  while (parent_[v] != root) v = std::exchange(parent_[v], root);
  return root;
}

void PathTracker::apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  ++products_;
  if (use_dense_) {
    y.noalias() = dense_ * x;
    return;
  }
  for (std::size_t v = 0; v < n_; ++v) {
    double s = 0.0;
    for (Vertex u : lists_[v]) s += x[u];
    y[static_cast<Eigen::Index>(v)] = s;
  }
}

void PathTracker::column(Vertex v, Eigen::VectorXd& out) const {
  if (use_dense_) {
    out = dense_.col(v);
    return;
  }
  out.setZero();
  for (Vertex u : lists_[v]) out[u] = 1.0;
}

// Appends t to the subspace; `image` must equal A t.
void PathTracker::push_direction(const Eigen::Ref<const Eigen::VectorXd>& t,
                                 const Eigen::Ref<const Eigen::VectorXd>& image) {
  const double original = t.norm();
  if (!(original > 0.0) || width_ == basis_.cols()) return;
  auto q = basis_.leftCols(width_);
  auto aq = images_.leftCols(width_);
  auto u = basis_.col(width_);
  auto au = images_.col(width_);
  u = t;
  au = image;
  // Classical Gram-Schmidt, repeated once when it cancels heavily.
  double norm = original;
  for (int pass = 0; pass < 2; ++pass) {
    const SmallVec c = q.transpose() * u;
    u.noalias() -= q * c;
    au.noalias() -= aq * c;
    const double before = norm;
    norm = u.norm();
    if (norm > 0.7 * before) break;
  }
  if (norm <= 1e-10 * original) return;
  u /= norm;
  au /= norm;
  const SmallVec h = basis_.leftCols(width_ + 1).transpose() * au;
  for (Eigen::Index k = 0; k <= width_; ++k) {
    projected_(k, width_) = h[k];
    projected_(width_, k) = h[k];
  }
  ++width_;
}

void PathTracker::refine(Vertex i, Vertex j) {
  const auto rows = static_cast<Eigen::Index>(n_);
  if (since_refresh_++ >= kRefreshEvery) {
    apply(x_, ax_);
    since_refresh_ = 0;
  }
  width_ = 0;
  push_direction(x_, ax_);
  for (Vertex v : {i, j}) {
    unit_.setZero();
    unit_[v] = 1.0;
    column(v, unit_image_);
    push_direction(unit_, unit_image_);
  }
  if (use_dense_ && 2 * (lists_[i].size() + lists_[j].size()) < n_) {
    // A^2 e_v = sum of A e_u over neighbours u; its image sums columns of A^2,
    // cheaper than a product while the degrees are below n / 4.
    for (Vertex v : {i, j}) {
      unit_image_.setZero();
      for (Vertex u : lists_[v]) unit_image_ += square_.col(u);
      push_direction(square_.col(v), unit_image_);
    }
  }
  // A e_v and its image A^2 e_v: read off A^2 when it is maintained, otherwise
  // summed over the neighbourhood of v.
  for (Vertex v : {i, j}) {
    if (use_dense_) {
      push_direction(dense_.col(v), square_.col(v));
      continue;
    }
    column(v, unit_);
    unit_image_.setZero();
    for (Vertex u : lists_[v])
      for (Vertex w : lists_[u]) unit_image_[w] += 1.0;
    push_direction(unit_, unit_image_);
  }
  if (use_dense_ && 2 * (lists_[i].size() + lists_[j].size()) < n_) {
    // A^2 e_v = sum of A e_u over neighbours u; its image sums columns of A^2,
    // cheaper than a product while the degrees are below n / 4.
    for (Vertex v : {i, j}) {
      unit_image_.setZero();
      for (Vertex u : lists_[v]) unit_image_ += square_.col(u);
      push_direction(square_.col(v), unit_image_);
    }
  }

  const std::size_t start_products = products_;
  Eigen::SelfAdjointEigenSolver<Small> small;
  Eigen::VectorXd& x = x_work_;
  Eigen::VectorXd& ax = ax_work_;
  Eigen::VectorXd& r = r_work_;
  Eigen::VectorXd& ar = ar_work_;
  SmallVec y = SmallVec::Zero(width_);
  y[0] = 1.0;  // the previous eigenvector leads the basis
  double theta = 0.0;
  while (true) {
    if (y.size() != width_) {
      const Eigen::Index old = y.size();
      y.conservativeResize(width_);
      if (width_ > old) y.tail(width_ - old).setZero();
    }
    const Small h = projected_.topLeftCorner(width_, width_);
    if (!top_small(h, y, theta)) {
      small.compute(h);
      y = small.eigenvectors().col(width_ - 1);
      theta = small.eigenvalues()[width_ - 1];
    }
    x.noalias() = basis_.leftCols(width_) * y;
    ax.noalias() = images_.leftCols(width_) * y;
    r = ax - theta * x;
    const double residual = r.norm();
    if (residual <= tol_ * std::max(1.0, std::abs(theta))) {
      const double nx = x.norm();
      x_ = x / nx;
      ax_ = ax / nx;
      theta_ = theta;
      return;
    }
    if (products_ - start_products >= limit_) {
      EigenPair best{theta, std::vector<double>(x.data(), x.data() + rows), residual,
                     products_ - start_products};
      throw SolverError("path tracker did not reach tol " + std::to_string(tol_) + " after " +
                            std::to_string(edges_) + " insertions",
                        std::move(best));
    }
    if (width_ == basis_.cols()) {
      // Thick restart on the leading Ritz vectors.
      const Eigen::Index keep = std::min(kKeepOnRestart, width_);
      small.compute(projected_.topLeftCorner(width_, width_));
      const Eigen::MatrixXd y_keep = small.eigenvectors().rightCols(keep);
      const Eigen::MatrixXd q = basis_.leftCols(width_) * y_keep;
      const Eigen::MatrixXd aq = images_.leftCols(width_) * y_keep;
      width_ = 0;
      for (Eigen::Index k = keep - 1; k >= 0; --k) push_direction(q.col(k), aq.col(k));
      y = SmallVec::Unit(width_, 0);
      continue;
    }
    // Products are cheap with adjacency lists, so expand by a short Krylov
    // block between Rayleigh-Ritz steps; with the dense matrix, one at a time.
    const Eigen::Index before = width_;
    const int steps = use_dense_ ? 1 : kSparseBlock;
    for (int s = 0; s < steps && width_ < basis_.cols(); ++s) {
      apply(r, ar);
      const Eigen::Index at = width_;
      push_direction(r, ar);
      if (width_ == at) break;
      // Continue the Krylov sequence from A q, orthogonalized before the
      // product so that its image is exact rather than a cancelled difference.
      r = images_.col(at);
      for (int pass = 0; pass < 2; ++pass) {
        const SmallVec c = basis_.leftCols(width_).transpose() * r;
        r.noalias() -= basis_.leftCols(width_) * c;
      }
    }
    if (width_ == before) {
      // Residual already inside the subspace; only rounding separates us
      // from tol. Restart from the Ritz vector with a fresh product.
      apply(x, ax);
      width_ = 0;
      push_direction(x, ax);
      y = SmallVec::Unit(width_, 0);
    }
  }
}

// Top eigenpair of the component rooted at `root`, from the flat start on its
// vertices. Products with A keep vectors supported on the component.
void PathTracker::solve_component(std::size_t root) {
  const auto rows = static_cast<Eigen::Index>(n_);
  std::vector<double> start(n_, 0.0);
  for (std::size_t v = 0; v < n_; ++v)
    if (find(v) == root) start[v] = 1.0;
  SolverSettings settings;
  settings.tol = tol_;
  settings.max_iter = limit_;
  settings.start = std::move(start);
  const SymmetricOperator op(n_, [this, rows](std::span<const double> in, std::span<double> out) {
    const Eigen::Map<const Eigen::VectorXd> xin(in.data(), rows);
    Eigen::VectorXd tmp(rows);
    apply(xin, tmp);
    Eigen::Map<Eigen::VectorXd>(out.data(), rows) = tmp;
  });
  const EigenPair pair = top_eigenpair_lanczos(op, settings);
  if (!tracking_ || pair.value > theta_) {
    tracking_ = true;
    tracked_ = root;
    theta_ = pair.value;
    x_ = Eigen::Map<const Eigen::VectorXd>(pair.vector.data(), rows);
    apply(x_, ax_);
    since_refresh_ = 0;
  }
}

double PathTracker::insert(Vertex i, Vertex j) {
  if (i == j || i >= n_ || j >= n_) throw InvalidArgument("PathTracker: bad edge");
  // Entries of x_ before the insertion, for the update of A x_.
  const double xi = x_[i];
  const double xj = x_[j];
  lists_[i].push_back(j);
  lists_[j].push_back(i);
  ++edges_;
  if (use_dense_) {
    // (A + E)^2 = A^2 + AE + EA + E^2 with E = e_i e_j^T + e_j e_i^T.
    square_.col(j) += dense_.col(i);
    square_.col(i) += dense_.col(j);
    // Rows i and j gain the old neighbourhoods of j and i; the new entry
    // sits at the back of each list.
    for (auto u = lists_[j].begin(); u + 1 != lists_[j].end(); ++u) square_(i, *u) += 1.0;
    for (auto u = lists_[i].begin(); u + 1 != lists_[i].end(); ++u) square_(j, *u) += 1.0;
    square_(i, i) += 1.0;
    square_(j, j) += 1.0;
    dense_(i, j) = 1.0;
    dense_(j, i) = 1.0;
  } else if (n_ <= kDenseMaxN && 2 * edges_ > kDenseEntriesPerVertex * n_) {
    const auto rows = static_cast<Eigen::Index>(n_);
    dense_ = Eigen::MatrixXd::Zero(rows, rows);
    for (std::size_t v = 0; v < n_; ++v)
      for (Vertex u : lists_[v]) dense_(static_cast<Eigen::Index>(v), u) = 1.0;
    square_.noalias() = dense_ * dense_;
    use_dense_ = true;
  }

  const std::size_t ri = find(i);
  const std::size_t rj = find(j);
  const std::size_t root = std::min(ri, rj);
  comp_edges_[root] = comp_edges_[ri] + (ri != rj ? comp_edges_[rj] : 0) + 1;
  parent_[ri] = root;
  parent_[rj] = root;

  if (tracking_ && (ri == tracked_ || rj == tracked_)) {
    tracked_ = root;
    ax_[i] += xj;
    ax_[j] += xi;
    refine(i, j);
  } else if (!tracking_ || std::sqrt(2.0 * static_cast<double>(comp_edges_[root])) >= theta_) {
    // lambda(C)^2 <= trace(A_C^2) = 2 |E(C)|, so smaller components are skipped.
    solve_component(root);
  }
  return theta_;
}

EigenPair PathTracker::eigenpair() const {
  EigenPair out;
  out.value = theta_;
  out.vector.assign(x_.data(), x_.data() + x_.size());
  sign_normalize(out.vector);
  const Eigen::Map<const Eigen::VectorXd> v(out.vector.data(), x_.size());
  Eigen::VectorXd av(x_.size());
  apply(v, av);
  out.residual = (av - theta_ * v).norm();
  out.iterations = products_;
  return out;
}

}  // namespace speclab::detail
