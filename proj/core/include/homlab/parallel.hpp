#ifndef HOMLAB_PARALLEL_HPP
#define HOMLAB_PARALLEL_HPP

#include <atomic>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace homlab {

/// Runs task(0..n_tasks-1) on up to `threads` workers.  Tasks must write to
/// disjoint, preallocated slots so results do not depend on scheduling;
/// parallelism then affects wall time only, never values.  The first thrown
/// exception is rethrown on the calling thread after all workers join.
inline void parallel_for(int n_tasks, int threads, const std::function<void(int)>& task) {
    if (n_tasks <= 0) return;
    if (threads <= 1 || n_tasks == 1) {
        for (int i = 0; i < n_tasks; ++i) task(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex err_mutex;
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n_tasks) return;
            try {
                task(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    const int n_workers = std::min(threads, n_tasks);
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline int default_threads() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

} // namespace homlab

#endif
