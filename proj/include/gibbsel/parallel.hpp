#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gibbsel {

/// GIBBSEL_THREADS overrides the hardware thread count.
inline unsigned worker_count()
{
    if (const char* env = std::getenv("GIBBSEL_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1U : n;
}

/// Runs body(i) for i in [0, n). Work is handed out in chunks through an
/// atomic counter; the first exception thrown by any worker is rethrown.
/// Callers must only write to slot i so results do not depend on scheduling.
template <typename Body>
void parallel_for(std::size_t n, Body&& body, std::size_t chunk = 16)
{
    const unsigned workers = static_cast<unsigned>(
        std::min<std::size_t>(worker_count(), (n + chunk - 1) / std::max<std::size_t>(chunk, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        for (;;) {
            const std::size_t begin = next.fetch_add(chunk);
            if (begin >= n) return;
            const std::size_t end = std::min(n, begin + chunk);
            try {
                for (std::size_t i = begin; i < end; ++i) body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace gibbsel
