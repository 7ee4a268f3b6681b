#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace feduv {

// Worker count: FEDUV_THREADS caps it, 0/unset falls back to the hardware.
inline unsigned effective_threads() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("FEDUV_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return std::min(hw * 4, static_cast<unsigned>(v));
    }
    return hw;
}

// Index-keyed fork/join. Results must be written to per-index slots so the
// outcome is independent of completion order.
inline void parallel_for(size_t n, const std::function<void(size_t)>& body) {
    unsigned workers = std::min<size_t>(effective_threads(), n);
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (size_t i = w; i < n; i += workers) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace feduv
