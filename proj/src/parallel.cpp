#include "fibcast/parallel.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fibcast::par {
namespace {

std::atomic<int> g_threads{0};

} // namespace

void set_threads(int n) {
    if (n < 0) n = 0;
    g_threads.store(n, std::memory_order_relaxed);
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#endif
}

int threads() {
    const int n = g_threads.load(std::memory_order_relaxed);
#ifdef _OPENMP
    if (n == 0) return omp_get_max_threads();
#endif
    return n == 0 ? 1 : n;
}

bool enabled() {
#ifdef _OPENMP
    return threads() > 1;
#else
    return false;
#endif
}

} // namespace fibcast::par
