#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lsvpm {

/// Runs body(i) for i in [0, n) over at most `threads` workers in contiguous chunks.
/// Each index is computed by exactly one worker, so per-index results do not depend on the
/// thread count. The first exception thrown by any worker is rethrown on the caller.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            pool.emplace_back([&, begin, end] {
                try {
                    for (std::size_t i = begin; i < end; ++i) body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

inline unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace lsvpm
