#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace fpca {

// Worker cap: FPCA_THREADS when set to a positive integer, otherwise the
// hardware concurrency (at least 1).
std::size_t worker_count();

// Runs body(i) for i in [0, count) on up to `workers` threads. Work is split
// into contiguous blocks; results must be written to per-index slots so the
// outcome never depends on scheduling. Calls made from inside a worker run
// sequentially. The first exception thrown by any
// block is rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  std::size_t workers = worker_count());

// Fixed-shape pairwise (tree) reduction. The association order depends only
// on the number of terms, so sums are bitwise reproducible.
template <typename T>
T pairwise_sum(std::span<const T> terms) {
  if (terms.empty()) return T{};
  if (terms.size() == 1) return terms[0];
  const std::size_t half = terms.size() / 2;
  T left = pairwise_sum(terms.subspan(0, half));
  T right = pairwise_sum(terms.subspan(half));
  return left + right;
}

template <typename T>
T pairwise_sum(const std::vector<T>& terms) {
  return pairwise_sum(std::span<const T>(terms.data(), terms.size()));
}

}  // namespace fpca
