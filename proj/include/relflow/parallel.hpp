#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace relflow {

/// Worker count from RELFLOW_THREADS, defaulting to 1. Values < 1 or
/// unparsable input fall back to 1.
inline unsigned thread_count() {
    const char* env = std::getenv("RELFLOW_THREADS");
    if (env == nullptr) return 1;
    try {
        const long n = std::stol(env);
        return n < 1 ? 1u : static_cast<unsigned>(std::min<long>(n, 256));
    } catch (...) {
        return 1;
    }
}

/// Runs fn(i) for i in [0, n) over contiguous chunks. Each index is visited
/// exactly once, so per-index writes stay deterministic. If several chunks
/// throw, the exception of the lowest chunk is rethrown.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const unsigned workers = std::min<std::size_t>(thread_count(), std::max<std::size_t>(n / 64, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        const std::size_t chunk = (n + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                const std::size_t lo = w * chunk;
                const std::size_t hi = std::min(n, lo + chunk);
                try {
                    for (std::size_t i = lo; i < hi; ++i) fn(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace relflow
