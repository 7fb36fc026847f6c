#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace neuroprobe {

// Worker count: NEUROPROBE_THREADS if set to a positive integer, otherwise the
// hardware concurrency (at least 1).
inline std::size_t default_thread_count() {
    if (const char* env = std::getenv("NEUROPROBE_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (...) {
        }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Splits [0, n) into `threads` contiguous chunks and calls
/// fn(begin, end, worker) for each on its own thread. Chunk boundaries depend
/// only on n and the worker count. The first exception thrown by a worker is
/// rethrown after all workers join.
template <typename Fn>
void parallel_chunks(std::size_t n, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        fn(std::size_t{0}, n, std::size_t{0});
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t begin = n * t / threads;
            const std::size_t end = n * (t + 1) / threads;
            pool.emplace_back([&, begin, end, t] {
                try {
                    fn(begin, end, t);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace neuroprobe
