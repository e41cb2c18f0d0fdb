#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace jumpdiff {

// Runs fn(i) for every i in [0, count) on up to n_threads workers.
//
// Work is handed out in small index chunks through an atomic cursor. Callers
// must write results into per-index slots; as long as they do, the outcome is
// identical for any thread count, which is what the determinism guarantees in
// the estimators rely on. The first exception thrown by any worker is rethrown.
inline void parallel_for(std::size_t count, unsigned n_threads,
                         const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    if (n_threads <= 1 || count == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const std::size_t chunk = 16;
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t begin = cursor.fetch_add(chunk);
            if (begin >= count) return;
            const std::size_t end = begin + chunk < count ? begin + chunk : count;
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    const unsigned workers = n_threads < count ? n_threads : static_cast<unsigned>(count);
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace jumpdiff
