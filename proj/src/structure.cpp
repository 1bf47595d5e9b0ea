#include "speclab/structure.hpp"

#include <cmath>
#include <numeric>
#include <utility>

#include "speclab/errors.hpp"

namespace speclab {
namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t v) {
    std::size_t root = v;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[v] != root) v = std::exchange(parent_[v], root);
    return root;
  }

  // The smaller label becomes the root, so every root is its component's
  // smallest vertex.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

ComponentSummary analyze(const GraphSnapshot& g) {
  const std::size_t n = g.n();
  DisjointSets sets(n);
  for (Vertex v = 0; v < n; ++v)
    for (Vertex u : g.neighbors(v))
      if (v < u) sets.unite(v, u);

  std::vector<std::size_t> vertices(n, 0), degree_sum(n, 0);
  for (Vertex v = 0; v < n; ++v) {
    const std::size_t root = sets.find(v);
    ++vertices[root];
    degree_sum[root] += g.degree(v);
  }

  ComponentSummary out;
  out.max_degree = g.max_degree();
  for (std::size_t root = 0; root < n; ++root) {
    if (vertices[root] == 0) continue;
    ++out.component_count;
    out.sizes.push_back(vertices[root]);
    if (degree_sum[root] / 2 + 1 == vertices[root]) {
      ++out.tree_census[vertices[root]];
    } else {
      out.is_forest = false;
    }
  }
  return out;
}

double forest_lambda_cap(const ComponentSummary& summary) {
  if (!summary.is_forest) throw InvalidArgument("forest_lambda_cap: graph is not a forest");
  if (summary.tree_census.empty()) return 0.0;
  const std::size_t largest = summary.tree_census.rbegin()->first;
  return std::sqrt(static_cast<double>(largest - 1));
}

}  // namespace speclab
