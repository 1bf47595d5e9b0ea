#pragma once

// Components, forests and tree counts of a snapshot.

#include <cstddef>
#include <map>
#include <vector>

#include "speclab/graph_process.hpp"

namespace speclab {

struct ComponentSummary {
  std::size_t component_count = 0;
  std::vector<std::size_t> sizes;  // ordered by each component's smallest vertex
  bool is_forest = true;
  std::map<std::size_t, std::size_t> tree_census;  // tree size -> count, isolated vertices included
  std::size_t max_degree = 0;
};

ComponentSummary analyze(const GraphSnapshot& g);

// sqrt(k - 1) for the largest tree size k; an upper bound on lambda of the
// forest. Throws InvalidArgument for a non-forest.
double forest_lambda_cap(const ComponentSummary& summary);

}  // namespace speclab
