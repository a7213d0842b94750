#pragma once

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace qdd {

inline unsigned worker_count(std::size_t n_tasks) {
    unsigned hw = std::thread::hardware_concurrency();
    if (const char* env = std::getenv("QDD_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) hw = unsigned(v);
    }
    if (hw == 0) hw = 1;
    return unsigned(std::min<std::size_t>(hw, n_tasks));
}

/// Runs fn(0..n-1) across threads. fn(i) must write only to slot i of
/// caller-owned storage, so results are identical for any thread count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const unsigned workers = worker_count(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (failed.load() && error) std::rethrow_exception(error);
}

}  // namespace qdd
