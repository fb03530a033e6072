#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace bae {

// Runs fn(i) for i in [begin, end) on up to `threads` workers. Callers write
// results into per-index slots and reduce in index order afterwards, so the
// outcome never depends on the parallelism degree.
inline void parallel_for(int begin, int end, int threads,
                         const std::function<void(int)>& fn) {
  const int count = end - begin;
  if (count <= 0) return;
  threads = std::clamp(threads, 1, count);
  if (threads == 1) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    workers.emplace_back([=, &fn] {
      for (int i = begin + w; i < end; i += threads) fn(i);
    });
  }
  for (std::thread& t : workers) t.join();
}

}  // namespace bae
