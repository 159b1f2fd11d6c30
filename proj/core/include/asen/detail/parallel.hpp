#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace asen::detail {

/// Runs job(0..count-1) on up to `threads` workers. Each index is claimed
/// exactly once; the first failing index (in index order) is rethrown after
/// all workers finish.
template <class Job>
void run_indexed(std::size_t count, std::size_t threads, const Job& job) {
    std::vector<std::exception_ptr> errors(count);
    auto guarded = [&](std::size_t i) {
        try {
            job(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) guarded(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) guarded(i);
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

} // namespace asen::detail
