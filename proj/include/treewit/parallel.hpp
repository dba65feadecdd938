#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace treewit {

/// Runs fn(0..count-1) on up to `threads` workers in strided chunks.
/// Callers collect results into pre-sized slots indexed by the task id, so
/// the outcome never depends on scheduling.
inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const int workers = static_cast<int>(std::min<std::size_t>(threads, count));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace treewit
