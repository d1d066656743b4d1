#pragma once

#include "channelrank/types.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <string_view>
#include <thread>
#include <vector>

namespace channelrank {

/// 0 means "one per hardware thread".
inline std::size_t resolve_threads(std::size_t requested)
{
    if (requested != 0) {
        return requested;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Reads a thread cap from the environment; unset or empty means 0 (auto).
inline std::size_t threads_from_env(const char* variable = "CHANNELRANK_THREADS")
{
    const char* raw = std::getenv(variable);
    if (raw == nullptr || *raw == '\0') {
        return 0;
    }
    const std::string_view text(raw);
    std::size_t value = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || end != text.data() + text.size()) {
        throw UsageError(std::string(variable) + " must be a non-negative integer, got '" + raw + "'");
    }
    return value;
}

/**
 * Runs body(i) for i in [0, count) on up to `threads` workers.
 *
 * Work items must write only to slots owned by their index, which makes the
 * result independent of scheduling. If several items throw, the exception of
 * the lowest index is rethrown, matching what a sequential loop would report.
 */
template <class Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body)
{
    const std::size_t workers = std::min(resolve_threads(threads), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) {
                return;
            }
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (std::size_t t = 1; t < workers; ++t) {
            pool.emplace_back(work);
        }
        work();
    }
    for (auto& error : errors) {
        if (error) {
            std::rethrow_exception(error);
        }
    }
}

} // namespace channelrank
