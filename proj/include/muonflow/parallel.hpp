#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace muonflow {

/// Runs fn(0..n_items-1) on up to n_threads workers. Items must be independent
/// and write only to their own slots, so results do not depend on the thread
/// count. n_threads <= 1 runs inline. The first exception thrown by any item
/// is rethrown on the calling thread after all workers join.
inline void parallel_for(std::size_t n_items, int n_threads,
                         const std::function<void(std::size_t)>& fn) {
    if (n_threads <= 1 || n_items <= 1) {
        for (std::size_t i = 0; i < n_items; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_items)
                return;
            try {
                fn(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
            }
        }
    };
    const int count = static_cast<int>(
        std::min<std::size_t>(n_items, static_cast<std::size_t>(n_threads)));
    std::vector<std::thread> pool;
    pool.reserve(count);
    for (int t = 0; t < count; ++t)
        pool.emplace_back(worker);
    for (auto& th : pool)
        th.join();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace muonflow
