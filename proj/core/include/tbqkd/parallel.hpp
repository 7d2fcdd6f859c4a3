#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace tbqkd {

/// Fixed-size chunking so that accumulation order (and therefore floating
/// point rounding) is identical for every thread count.
inline constexpr std::int64_t kParallelChunk = 4096;

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Run fn(chunk_index, begin, end) over [0, total) split into kParallelChunk
/// slices. Each chunk index is processed exactly once; the caller reduces
/// per-chunk results in chunk order to stay bitwise deterministic.
template <typename Fn>
void for_each_chunk(std::int64_t total, int threads, Fn&& fn) {
  if (total <= 0) return;
  const std::int64_t n_chunks = (total + kParallelChunk - 1) / kParallelChunk;
  threads = resolve_threads(threads);
  if (threads == 1 || n_chunks == 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c) {
      const std::int64_t begin = c * kParallelChunk;
      const std::int64_t end = std::min(total, begin + kParallelChunk);
      fn(c, begin, end);
    }
    return;
  }

  std::atomic<std::int64_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::int64_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      const std::int64_t begin = c * kParallelChunk;
      const std::int64_t end = std::min(total, begin + kParallelChunk);
      fn(c, begin, end);
    }
  };
  std::vector<std::jthread> pool;
  const int n_workers = static_cast<int>(std::min<std::int64_t>(threads, n_chunks));
  pool.reserve(static_cast<std::size_t>(n_workers));
  for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
}

}  // namespace tbqkd
