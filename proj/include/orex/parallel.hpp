#pragma once

#include <algorithm>
#include <cstdlib>
#include <cstddef>
#include <string>
#include <thread>
#include <vector>

namespace orex {

// Worker cap: RHJB_THREADS wins over hardware_concurrency.  A value of 1
// disables threading entirely.
inline unsigned worker_count() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("RHJB_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) return static_cast<unsigned>(std::min<long>(v, 256));
    }
    return hw;
}

// Static-chunk parallel loop over [0, n).  fn(begin, end) must only write
// to disjoint slots, so the result is identical for any worker count.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t grain = 2048) {
    unsigned workers = worker_count();
    if (n == 0) return;
    if (workers <= 1 || n < 2 * grain) {
        fn(std::size_t{0}, n);
        return;
    }
    std::size_t chunks = std::min<std::size_t>(workers, (n + grain - 1) / grain);
    std::size_t step = (n + chunks - 1) / chunks;
    std::vector<std::thread> pool;
    pool.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
        std::size_t begin = c * step;
        std::size_t end = std::min(n, begin + step);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& t : pool) t.join();
}

} // namespace orex
