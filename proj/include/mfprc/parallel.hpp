#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace mfprc {

// Runs fn(i) for i in [0, n) on up to `threads` workers (0: hardware
// concurrency). Work is claimed dynamically; results must be written to
// per-index slots. Rethrows the exception of the lowest failing index.
template <class Fn>
void parallel_for(long n, int threads, Fn&& fn) {
    if (n <= 0) return;
    unsigned hw = std::thread::hardware_concurrency();
    long workers = threads > 0 ? threads : static_cast<long>(hw == 0 ? 1 : hw);
    workers = std::clamp(workers, 1L, n);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    std::atomic<long> next{0};
    auto run = [&] {
        for (long i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (long w = 0; w < workers; ++w) pool.emplace_back(run);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace mfprc
