#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace greenmap::detail {

// Runs body(i) for i in [0, n) on up to `jobs` threads (jobs <= 0: all cores).
// Each index is visited exactly once; callers write results by index.
template <class Body>
void parallel_for(std::size_t n, int jobs, Body&& body)
{
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) body(i);
    };
    unsigned count = jobs > 0 ? static_cast<unsigned>(jobs) : std::max(1u, std::thread::hardware_concurrency());
    count = static_cast<unsigned>(std::min<std::size_t>(count, std::max<std::size_t>(n, 1)));
    if (count <= 1) {
        worker();
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(count);
    for (unsigned k = 0; k < count; ++k) pool.emplace_back(worker);
}

} // namespace greenmap::detail
