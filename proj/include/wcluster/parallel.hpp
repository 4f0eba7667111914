#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace wcluster {

/// Splits [0, n) into `chunks` contiguous ranges; range boundaries depend only
/// on (n, chunks), so per-chunk reductions merged in chunk order are
/// deterministic for a fixed thread count.
inline std::size_t chunk_begin(std::size_t n, std::size_t chunks, std::size_t i) noexcept {
    return (n * i) / chunks;
}

/// Calls fn(begin, end, chunk) for each chunk, chunk 0 on the calling thread.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n == 0 ? 1 : n));
    if (threads == 1) {
        fn(std::size_t{0}, n, std::size_t{0});
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> workers;
    workers.reserve(threads - 1);
    for (std::size_t t = 1; t < threads; ++t) {
        workers.emplace_back([&, t] {
            try {
                fn(chunk_begin(n, threads, t), chunk_begin(n, threads, t + 1), t);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    try {
        fn(std::size_t{0}, chunk_begin(n, threads, 1), std::size_t{0});
    } catch (...) {
        errors[0] = std::current_exception();
    }
    for (auto& w : workers) {
        w.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

/// Number of chunks parallel_for will actually use.
inline std::size_t effective_threads(std::size_t n, std::size_t threads) noexcept {
    return std::max<std::size_t>(1, std::min(threads, n == 0 ? 1 : n));
}

/// Default worker count: $WCLUSTER_THREADS when set to a positive integer, else 1.
inline std::size_t default_thread_count() {
    if (const char* env = std::getenv("WCLUSTER_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) {
            return std::size_t(v);
        }
    }
    return 1;
}

} // namespace wcluster
