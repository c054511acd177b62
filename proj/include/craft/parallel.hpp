#pragma once

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace craft {

// Worker count: CRAFT_THREADS caps it, hardware concurrency is the default.
inline int worker_count() {
    static const int n = [] {
        int hw = int(std::thread::hardware_concurrency());
        if (hw < 1) hw = 1;
        if (const char* env = std::getenv("CRAFT_THREADS")) {
            int v = std::atoi(env);
            if (v >= 1 && v < hw) hw = v;
            if (v >= 1 && v >= hw) hw = v;
        }
        return hw;
    }();
    return n;
}

// Splits [0, n) into contiguous chunks, one per worker. Each index is written by
// exactly one worker, so results are identical for any worker count.
inline void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& body) {
    int workers = worker_count();
    if (workers <= 1 || n < 256) {
        body(0, n);
        return;
    }
    if (int64_t(workers) > n) workers = int(n);
    std::vector<std::thread> pool;
    pool.reserve(size_t(workers - 1));
    int64_t chunk = (n + workers - 1) / workers;
    for (int t = 1; t < workers; ++t) {
        int64_t lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    body(0, std::min(n, chunk));
    for (auto& th : pool) th.join();
}

}  // namespace craft
