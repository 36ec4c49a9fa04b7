#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace she {

/// Runs fn(path_index) for path_index = 0..n_paths-1 on up to n_threads
/// workers and returns results indexed by path. Work distribution never
/// affects results: each slot is written once and callers reduce in path
/// order, so the thread count cannot change any output byte.
template <typename T>
std::vector<T> run_ensemble(std::int64_t n_paths, int n_threads,
                            const std::function<T(std::int64_t)>& fn) {
    std::vector<T> results(static_cast<std::size_t>(n_paths));
    if (n_threads <= 1 || n_paths <= 1) {
        for (std::int64_t p = 0; p < n_paths; ++p)
            results[static_cast<std::size_t>(p)] = fn(p);
        return results;
    }
    std::atomic<std::int64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::int64_t p = next.fetch_add(1);
            if (p >= n_paths) return;
            try {
                results[static_cast<std::size_t>(p)] = fn(p);
            } catch (...) {
                std::lock_guard<std::mutex> lk(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int k = static_cast<int>(std::min<std::int64_t>(n_threads, n_paths));
    pool.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return results;
}

} // namespace she
