#include "fpnsd/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fpnsd::parallel {

namespace {

std::atomic<int> g_max_threads{0};

int env_threads() {
    const char* raw = std::getenv("FPNSD_THREADS");
    if (raw == nullptr || *raw == '\0') {
        return 0;
    }
    try {
        const int n = std::stoi(raw);
        return n > 0 ? n : 0;
    } catch (const std::exception&) {
        return 0;
    }
}

}  // namespace

int max_threads() {
    const int pinned = g_max_threads.load(std::memory_order_relaxed);
    if (pinned > 0) {
        return pinned;
    }
    const int env = env_threads();
    if (env > 0) {
        return env;
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_max_threads(int n) {
    g_max_threads.store(n > 0 ? n : 0, std::memory_order_relaxed);
}

bool openmp_enabled() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

}  // namespace fpnsd::parallel
