#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

/// Deterministic data parallelism.
///
/// Work is split into contiguous index ranges fixed by (n, n_threads)
/// alone; each worker writes only to its own slice and random variates are
/// counter-indexed, so results are bit-identical for any thread count.
namespace chaoslab::parallel {

namespace detail {
inline int& thread_setting() {
    static int value = 0; // 0 = not yet resolved
    return value;
}

inline bool& inside_worker() {
    thread_local bool flag = false;
    return flag;
}
} // namespace detail

/// Current worker budget.  Resolution order: set_max_threads() if called,
/// else the CHAOSLAB_THREADS environment variable, else hardware_concurrency.
inline int max_threads() {
    int& v = detail::thread_setting();
    if (v > 0) return v;
    if (const char* env = std::getenv("CHAOSLAB_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return v = n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return v = hw > 0 ? int(hw) : 1;
}

inline void set_max_threads(int n) {
    if (n > 0) detail::thread_setting() = n;
}

/// Run fn(begin, end) over a static partition of [0, n).  Exceptions from
/// workers are captured and the first one is rethrown on the caller.
/// Nested calls (from inside a worker) run inline to avoid oversubscription.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                         int n_threads = 0) {
    if (n == 0) return;
    std::size_t workers = std::size_t(n_threads > 0 ? n_threads : max_threads());
    workers = std::min(workers, n);
    if (workers <= 1 || detail::inside_worker()) {
        fn(0, n);
        return;
    }
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t begin = w * chunk;
        std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
            detail::inside_worker() = true;
            try {
                fn(begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace chaoslab::parallel
