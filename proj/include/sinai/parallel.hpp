#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sinai {

/// Worker count: explicit value if positive, else SINAI_THREADS, else 1.
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SINAI_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

/// Calls fn(i) for i in [0, count). Work is handed out by index and results are
/// expected to land in per-index slots, so output never depends on scheduling.
template <class Fn>
void parallel_for(std::uint64_t count, int threads, Fn&& fn) {
    const auto workers = static_cast<std::uint64_t>(std::max(1, resolve_threads(threads)));
    if (workers == 1 || count < 2) {
        for (std::uint64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;
    auto body = [&] {
        for (;;) {
            const std::uint64_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_lock);
                if (!failure) failure = std::current_exception();
                next.store(count);
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::uint64_t t = 0; t < std::min(workers, count); ++t) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace sinai
