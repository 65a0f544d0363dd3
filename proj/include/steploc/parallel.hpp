#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace steploc {

/// Run fn(0..n-1) on up to `threads` workers. Each index is processed exactly
/// once; callers must write results into per-index slots so the output does
/// not depend on scheduling. The first exception thrown by any worker is
/// rethrown on the calling thread.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    if (threads <= 1 || n == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    const int workers = std::min(threads, n);
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (!failed.load(std::memory_order_relaxed)) {
                const int i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= n) break;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed.store(true, std::memory_order_relaxed);
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace steploc
