#pragma once

// Index-parallel loops. Results are written by index, so output never depends
// on the thread count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace tatelab {

namespace detail {
inline std::atomic<int>& thread_override() {
    static std::atomic<int> value{0};
    return value;
}
}  // namespace detail

/// 0 restores the default (TATELAB_THREADS, else hardware concurrency).
inline void set_thread_count(int n) { detail::thread_override().store(std::max(n, 0)); }

inline int thread_count() {
    if (int n = detail::thread_override().load(); n > 0) return n;
    if (const char* env = std::getenv("TATELAB_THREADS")) {
        try {
            int n = std::stoi(env);
            if (n > 0) return n;
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(i) for i in [0, n). The first exception thrown is rethrown.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace tatelab
