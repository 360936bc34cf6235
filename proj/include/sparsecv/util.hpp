#ifndef SPARSECV_UTIL_HPP
#define SPARSECV_UTIL_HPP

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace sparsecv {

// Worker count: SPARSECV_WORKERS env var, else hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("SPARSECV_WORKERS")) {
    const long v = std::atol(env);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

// Static block partition over [0, n); results must be written to
// caller-owned per-index slots so the merge is deterministic.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const unsigned workers = std::min<std::size_t>(worker_count(), n ? n : 1);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace sparsecv

#endif  // SPARSECV_UTIL_HPP
