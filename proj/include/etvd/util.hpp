#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace etvd {

namespace detail {
inline std::atomic<int>& thread_count_slot() {
    static std::atomic<int> count{0};  // 0 = use hardware concurrency
    return count;
}
}  // namespace detail

inline int thread_count() {
    int n = detail::thread_count_slot().load(std::memory_order_relaxed);
    if (n > 0) return n;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

inline void set_thread_count(int n) {
    detail::thread_count_slot().store(n, std::memory_order_relaxed);
}

// Runs f(i) for i in [0, n). Work is split into contiguous chunks, one per
// thread, so every index is processed by exactly one thread and results do
// not depend on the number of threads.
template <typename F>
void parallel_for(int64_t n, F&& f) {
    if (n <= 0) return;
    int threads = std::min<int64_t>(thread_count(), n);
    if (threads <= 1) {
        for (int64_t i = 0; i < n; ++i) f(i);
        return;
    }
    int64_t chunk = (n + threads - 1) / threads;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        int64_t lo = t * chunk;
        int64_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &f] {
            for (int64_t i = lo; i < hi; ++i) f(i);
        });
    }
    for (auto& th : pool) th.join();
}

template <typename T>
T clamp01(T v) {
    return std::clamp(v, T(0), T(1));
}

}  // namespace etvd
