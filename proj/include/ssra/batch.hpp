// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#pragma once

#include <atomic>
#include <functional>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

#include "ssra/modelio.hpp"

namespace ssra::modelio {

// Value-type mirror of ModelError for storing failures in-position.
struct ModelFailure {
    ModelErrorKind kind = ModelErrorKind::endpoint;
    std::string message;
    std::string raw_reply;
};

template <class T>
struct ItemOutcome {
    std::optional<T> value;
    std::optional<ModelFailure> failure;

    bool ok() const { return value.has_value(); }
};

// Runs fn over requests with at most max_concurrency calls in flight.
// Result i always corresponds to request i; a failed call stores its error
// in-position instead of aborting the batch. With max_concurrency 1 this is
// plain sequential execution.
template <class Req, class Fn>
auto run_batch(const std::vector<Req>& requests, Fn&& fn, int max_concurrency)
    -> std::vector<ItemOutcome<std::invoke_result_t<Fn&, const Req&>>> {
    using T = std::invoke_result_t<Fn&, const Req&>;
    static_assert(!std::is_void_v<T>, "batch operations must return a value");

    std::vector<ItemOutcome<T>> results(requests.size());
    if (requests.empty()) {
        return results;
    }
    if (max_concurrency < 1) {
        max_concurrency = 1;
    }

    const auto run_one = [&](std::size_t i) {
        try {
            results[i].value = fn(requests[i]);
        } catch (const ModelError& e) {
            results[i].failure = ModelFailure{e.kind(), e.what(), e.raw_reply()};
        } catch (const std::exception& e) {
            results[i].failure = ModelFailure{ModelErrorKind::endpoint, e.what(), {}};
        }
    };

    const std::size_t n_workers =
        std::min<std::size_t>(static_cast<std::size_t>(max_concurrency), requests.size());
    if (n_workers == 1) {
        for (std::size_t i = 0; i < requests.size(); ++i) {
            run_one(i);
        }
        return results;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) {
        workers.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= requests.size()) {
                    return;
                }
                run_one(i);
            }
        });
    }
    for (auto& t : workers) {
        t.join();
    }
    return results;
}

// Retries fn on ModelError with exponential backoff; other exceptions
// propagate immediately. Exactly one result is produced per call.
template <class Fn>
auto with_retry(const RetryPolicy& policy, Fn&& fn) -> std::invoke_result_t<Fn&> {
    auto delay = policy.backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            return fn();
        } catch (const ModelError&) {
            if (attempt >= policy.max_attempts) {
                throw;
            }
            if (delay.count() > 0) {
                std::this_thread::sleep_for(delay);
            }
            delay *= 2;
        }
    }
}

} // namespace ssra::modelio
