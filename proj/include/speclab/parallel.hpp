#pragma once

// Replicate-level parallelism with a deterministic merge: results land in
// slots indexed by replicate, so the output never depends on scheduling.

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <optional>
#include <thread>
#include <vector>

namespace speclab {

// SPECLAB_THREADS if set to a positive integer, else 1.
std::size_t default_thread_count();

// Runs body(index) for index in [0, count) on up to `threads` workers. If any
// call throws, the exception from the smallest failing index is rethrown
// after all workers finish.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t count, std::size_t threads, Fn&& fn) {
  std::vector<std::optional<T>> slots(count);
  parallel_for(count, threads, [&](std::size_t index) { slots[index].emplace(fn(index)); });
  std::vector<T> out;
  out.reserve(count);
  for (auto& slot : slots) out.push_back(std::move(*slot));
  return out;
}

}  // namespace speclab
