/*
 *  parallel.hpp
 *  Chunked parallel loops. Work is split into a fixed number of chunks so
 *  that per-chunk partial results (and therefore reduction order) do not
 *  depend on the worker count; combining partials in chunk order gives
 *  bitwise-identical results for any number of threads.
 */
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace bhsne {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

inline constexpr std::size_t kParallelChunks = 64;

inline std::size_t chunk_count(std::size_t n) { return std::min(n, kParallelChunks); }

// Invokes body(chunk_index, begin, end) over a partition of [0, n).
template <class Body>
void parallel_chunks(std::size_t n, int threads, Body&& body) {
    if (n == 0) return;
    const std::size_t chunks = chunk_count(n);
    const auto bound = [n, chunks](std::size_t c) { return c * n / chunks; };

    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(resolve_threads(threads)), chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) body(c, bound(c), bound(c + 1));
        return;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (std::size_t c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
                body(c, bound(c), bound(c + 1));
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace bhsne
