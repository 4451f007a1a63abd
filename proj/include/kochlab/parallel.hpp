#ifndef KOCHLAB_PARALLEL_HPP
#define KOCHLAB_PARALLEL_HPP

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace kochlab {

inline unsigned worker_count() {
    if (const char* env = std::getenv("KOCHLAB_THREADS")) {
        const long v = std::atol(env);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc ? hc : 1;
}

// Runs per_path(i, acc) for i in [0, n_paths) over a fixed block grid and
// merges block accumulators in block order, so results are independent of
// the number of workers.
template <class Acc, class Fn>
Acc run_paths_blocked(uint64_t n_paths, Fn&& per_path, unsigned threads = 0) {
    if (threads == 0) threads = worker_count();
    constexpr uint64_t kBlock = 256;
    const uint64_t n_blocks = (n_paths + kBlock - 1) / kBlock;
    // block partials are always materialized and folded in block order, so
    // the floating-point result does not depend on the worker count
    std::vector<Acc> partials(n_blocks);
    std::atomic<uint64_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const uint64_t b = next.fetch_add(1);
            if (b >= n_blocks) return;
            Acc acc{};
            const uint64_t lo = b * kBlock;
            const uint64_t hi = std::min(n_paths, lo + kBlock);
            for (uint64_t i = lo; i < hi; ++i) per_path(i, acc);
            partials[b] = std::move(acc);
        }
    };
    if (threads <= 1 || n_blocks <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    Acc out{};
    for (auto& p : partials) out.merge(p);
    return out;
}

}  // namespace kochlab

#endif
