// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace poa {

/// Runs body(i) for i in [0, count) on up to `parallelism` threads. Work is
/// handed out by index, so results written to per-index slots do not depend
/// on scheduling. The first exception thrown by any body is rethrown.
template <typename Body>
void parallel_for(std::size_t count, int parallelism, Body&& body) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(parallelism, 1)), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = count;
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(run);
    run();
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace poa
