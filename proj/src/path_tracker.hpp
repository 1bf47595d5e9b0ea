#pragma once

// Incremental top eigenpair along an edge-insertion path. Used by
// lambda_path; internal to the library.

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "speclab/graph_process.hpp"
#include "speclab/spectra.hpp"

namespace speclab::detail {

class PathTracker {
 public:
  PathTracker(std::size_t n, const SolverSettings& settings);

  // Adds edge (i, j) and returns the new top eigenvalue.
  double insert(Vertex i, Vertex j);

  double value() const { return theta_; }
  std::size_t edge_count() const { return edges_; }
  std::size_t products() const { return products_; }
  // Current Ritz vector, sign-normalized, and its true residual.
  EigenPair eigenpair() const;

 private:
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
  std::size_t find(std::size_t v);
  void column(Vertex v, Eigen::VectorXd& out) const;
  void push_direction(const Eigen::Ref<const Eigen::VectorXd>& t,
                      const Eigen::Ref<const Eigen::VectorXd>& image);
  void refine(Vertex i, Vertex j);
  void solve_component(std::size_t root);

  std::size_t n_;
  double tol_;
  std::size_t limit_;
  std::size_t edges_ = 0;
  mutable std::size_t products_ = 0;
  std::size_t since_refresh_ = 0;

  std::vector<std::vector<Vertex>> lists_;
  Eigen::MatrixXd dense_;
  Eigen::MatrixXd square_;  // A^2, kept alongside dense_
  bool use_dense_ = false;

  std::vector<std::size_t> parent_;
  std::vector<std::size_t> comp_edges_;
  bool tracking_ = false;
  std::size_t tracked_ = 0;  // component root carrying x_

  double theta_ = 0.0;
  Eigen::VectorXd x_, ax_;
  // Subspace for the Rayleigh-Ritz steps: orthonormal columns, their images
  // under A, and the projected matrix basis^T A basis.
  Eigen::MatrixXd basis_, images_, projected_;
  Eigen::Index width_ = 0;
  // Scratch vectors reused across insertions.
  Eigen::VectorXd unit_, unit_image_, x_work_, ax_work_, r_work_, ar_work_;
};

}  // namespace speclab::detail
