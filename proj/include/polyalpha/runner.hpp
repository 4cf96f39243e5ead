#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace polyalpha {

/// Resolves a requested thread count; 0 means "all hardware threads".
inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Runs `task(index)` for index in [0, reps) on up to `threads` workers and
/// returns the results in index order. Workers pull small chunks from a
/// shared counter; since each task is a pure function of its index (its
/// random streams are derived from the index), the output does not depend
/// on scheduling. The first exception thrown by any task is rethrown.
template <class Result, class Task>
std::vector<Result> run_replications(std::uint64_t reps, unsigned threads, Task&& task) {
    std::vector<Result> results(reps);
    const unsigned workers =
        static_cast<unsigned>(std::min<std::uint64_t>(resolve_threads(threads), std::max<std::uint64_t>(reps, 1)));
    constexpr std::uint64_t kChunk = 16;
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (;;) {
            const std::uint64_t begin = next.fetch_add(kChunk);
            if (begin >= reps) return;
            const std::uint64_t end = std::min(reps, begin + kChunk);
            for (std::uint64_t i = begin; i < end; ++i) {
                try {
                    results[i] = task(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next.store(reps);
                    return;
                }
            }
        }
    };

    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return results;
}

}  // namespace polyalpha
