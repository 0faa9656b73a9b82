#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace bhsr {

/// Process-wide cap on worker threads (the CLI's --threads). 0 = hardware.
void set_max_threads(unsigned n);
unsigned max_threads();

/// Runs body(block) for block in [0, n_blocks). Blocks are statically
/// partitioned so results never depend on the worker count; callers merge
/// per-block outputs in block order.
template <class Body>
void parallel_blocks(std::size_t n_blocks, Body&& body) {
    const std::size_t workers = std::min<std::size_t>(max_threads(), n_blocks);
    if (workers <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) body(b);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t b = w; b < n_blocks; b += workers) body(b);
        });
    }
}

}  // namespace bhsr
