#pragma once

#include <omp.h>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <vector>

namespace mufide::par {

// Thread cap: MUFIDE_THREADS when set and positive, otherwise the OpenMP
// default for this machine.
inline int max_threads() {
  if (const char* env = std::getenv("MUFIDE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return omp_get_max_threads();
}

// Static parallel loop over [0, n). Each index is handled exactly once and
// writes only its own slots, so results are independent of the schedule.
template <class F>
void parallel_for(std::int64_t n, F&& f) {
  const int threads = max_threads();
#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::int64_t i = 0; i < n; ++i) f(i);
}

// Deterministic parallel sum of per-index contributions: the index range is
// cut into fixed-size chunks, chunk subtotals are accumulated in index order
// within each chunk, and chunk results are combined in chunk order. The
// grouping depends only on n and chunk_size, never on the thread count, so
// the floating-point result is bitwise stable for any MUFIDE_THREADS.
template <class F>
double deterministic_sum(std::int64_t n, F&& f, std::int64_t chunk_size = 1024) {
  if (n <= 0) return 0.0;
  const std::int64_t chunks = (n + chunk_size - 1) / chunk_size;
  std::vector<double> partial(static_cast<std::size_t>(chunks), 0.0);
  const int threads = max_threads();
#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::int64_t c = 0; c < chunks; ++c) {
    const std::int64_t lo = c * chunk_size;
    const std::int64_t hi = std::min(n, lo + chunk_size);
    double acc = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) acc += f(i);
    partial[static_cast<std::size_t>(c)] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace mufide::par
