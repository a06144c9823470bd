// Minimal blocked parallel_for.  Work is split into contiguous ranges; the
// callable must be safe to run on disjoint ranges concurrently.  Results must
// not depend on the partitioning (per-entity RNG substreams guarantee this
// for the samplers).

#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace genescreen {

template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    if (n == 0) return;
    threads = std::max<std::size_t>(threads, 1);
    threads = std::min(threads, n);
    if (threads == 1) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(lo + chunk, n);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

inline std::size_t default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

}  // namespace genescreen
