// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#include <doctest.h>

#include <cmath>

#include "ssra/loss.hpp"
#include "test_support.hpp"

using namespace ssra;
using namespace ssra::loss;

TEST_CASE("weight_default is s/3") {
    CHECK(weight_default(0) == doctest::Approx(0.0));
    CHECK(weight_default(1) == doctest::Approx(1.0 / 3.0));
    CHECK(weight_default(2) == doctest::Approx(2.0 / 3.0).epsilon(1e-4));
    CHECK(weight_default(3) == doctest::Approx(1.0));
}

TEST_CASE("single-anchor batch has zero loss and zero gradient") {
    EmbeddingBatch batch;
    batch.queries = {{1.0, 2.0, 0.5}};
    batch.documents = {{-0.3, 0.7, 1.1}};
    batch.labels = {3};
    batch.temperature = 0.05;
    const LossResult result = weighted_infonce(batch);
    CHECK(result.loss == doctest::Approx(0.0));
    for (double g : result.grad_queries[0]) {
        CHECK(g == doctest::Approx(0.0));
    }
    for (double g : result.grad_documents[0]) {
        CHECK(g == doctest::Approx(0.0));
    }
}

TEST_CASE("all label-0 batch errors") {
    EmbeddingBatch batch;
    batch.queries = {{1.0, 0.0}, {0.0, 1.0}};
    batch.documents = {{1.0, 0.0}, {0.0, 1.0}};
    batch.labels = {0, 0};
    try {
        weighted_infonce(batch);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("all weights zero") != std::string::npos);
    }
}

TEST_CASE("input validation") {
    EmbeddingBatch batch;
    batch.queries = {{1.0, 0.0}};
    batch.documents = {{0.0, 0.0}}; // zero norm
    batch.labels = {3};
    CHECK_THROWS_AS(weighted_infonce(batch), Error);

    batch.documents = {{1.0, 0.0}};
    batch.temperature = 0.0;
    CHECK_THROWS_AS(weighted_infonce(batch), Error);

    batch.temperature = 1.0;
    batch.labels = {5};
    CHECK_THROWS_AS(weighted_infonce(batch), Error);
}

TEST_CASE("analytic gradients match central finite differences over the grid") {
    // n in {2,4,8} x d in {4,16} x tau in {0.05, 1.0}.
    std::uint64_t seed = 1000;
    for (const std::size_t n : {2, 4, 8}) {
        for (const std::size_t dim : {4, 16}) {
            for (const double tau : {0.05, 1.0}) {
                const EmbeddingBatch batch = test_support::random_batch(++seed, n, dim, tau);
                const LossResult result = weighted_infonce(batch);
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t t = 0; t < dim; ++t) {
                        const double fd_q =
                            test_support::fd_partial(batch, true, i, t, weight_default);
                        const double fd_d =
                            test_support::fd_partial(batch, false, i, t, weight_default);
                        CHECK(test_support::rel_err(result.grad_queries[i][t], fd_q) <= 1e-5);
                        CHECK(test_support::rel_err(result.grad_documents[i][t], fd_d) <= 1e-5);
                    }
                }
            }
        }
    }
}

TEST_CASE("dot-product similarity gradients also match finite differences") {
    const EmbeddingBatch batch = test_support::random_batch(4242, 4, 8, 0.5);
    const LossResult result = weighted_infonce(batch, weight_default, Similarity::dot);
    auto dot_loss = [&](EmbeddingBatch b) {
        return weighted_infonce(b, weight_default, Similarity::dot).loss;
    };
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t t = 0; t < 8; ++t) {
            EmbeddingBatch up = batch;
            EmbeddingBatch down = batch;
            up.queries[i][t] += 1e-6;
            down.queries[i][t] -= 1e-6;
            const double fd = (dot_loss(up) - dot_loss(down)) / 2e-6;
            CHECK(test_support::rel_err(result.grad_queries[i][t], fd) <= 1e-5);
        }
    }
}

TEST_CASE("weight scaling is exactly linear") {
    const EmbeddingBatch batch = test_support::random_batch(777, 4, 8, 0.05);
    const double c = 2.5;
    const LossResult base = weighted_infonce(batch, weight_default);
    const LossResult scaled = weighted_infonce(
        batch, [&](int label) { return c * weight_default(label); });
    CHECK(scaled.loss == doctest::Approx(c * base.loss).epsilon(1e-12));
    for (std::size_t i = 0; i < batch.queries.size(); ++i) {
        for (std::size_t t = 0; t < batch.queries[i].size(); ++t) {
            CHECK(scaled.grad_queries[i][t] ==
                  doctest::Approx(c * base.grad_queries[i][t]).epsilon(1e-12));
            CHECK(scaled.grad_documents[i][t] ==
                  doctest::Approx(c * base.grad_documents[i][t]).epsilon(1e-12));
        }
    }
}

TEST_CASE("zero-weight anchors contribute nothing but still serve as negatives") {
    EmbeddingBatch batch = test_support::random_batch(888, 4, 8, 0.1);
    batch.labels = {3, 0, 2, 0};
    const LossResult result = weighted_infonce(batch);

    // Zero-weight anchors have exactly zero query gradient.
    for (double g : result.grad_queries[1]) {
        CHECK(g == 0.0);
    }
    for (double g : result.grad_queries[3]) {
        CHECK(g == 0.0);
    }
    // Their documents still receive gradient as negatives of other anchors.
    double doc1_norm = 0.0;
    for (double g : result.grad_documents[1]) {
        doc1_norm += g * g;
    }
    CHECK(doc1_norm > 0.0);

    // Dropping a zero-weight anchor's loss row changes nothing: recompute
    // with its weight forced to zero through the default path.
    const LossResult again = weighted_infonce(batch);
    CHECK(again.loss == doctest::Approx(result.loss).epsilon(1e-15));
}

TEST_CASE("loss is nonnegative and finite on random batches") {
    for (std::uint64_t seed = 5000; seed < 5050; ++seed) {
        const EmbeddingBatch batch = test_support::random_batch(seed, 2 + seed % 7, 6, 0.07);
        const LossResult result = weighted_infonce(batch);
        CHECK(result.loss >= 0.0);
        CHECK(std::isfinite(result.loss));
    }
}

TEST_CASE("permuting the batch permutes gradients and keeps the loss") {
    const EmbeddingBatch batch = test_support::random_batch(321, 5, 6, 0.05);
    const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
    EmbeddingBatch permuted;
    permuted.temperature = batch.temperature;
    for (std::size_t i : perm) {
        permuted.queries.push_back(batch.queries[i]);
        permuted.documents.push_back(batch.documents[i]);
        permuted.labels.push_back(batch.labels[i]);
    }
    const LossResult a = weighted_infonce(batch);
    const LossResult b = weighted_infonce(permuted);
    CHECK(b.loss == doctest::Approx(a.loss).epsilon(1e-12));
    for (std::size_t k = 0; k < perm.size(); ++k) {
        for (std::size_t t = 0; t < batch.queries[0].size(); ++t) {
            CHECK(b.grad_queries[k][t] ==
                  doctest::Approx(a.grad_queries[perm[k]][t]).epsilon(1e-9));
            CHECK(b.grad_documents[k][t] ==
                  doctest::Approx(a.grad_documents[perm[k]][t]).epsilon(1e-9));
        }
    }
}

TEST_CASE("hard negatives enter the denominator and receive gradients") {
    EmbeddingBatch batch = test_support::random_batch(99, 3, 4, 0.2);
    batch.hard_negatives.resize(3);
    batch.hard_negatives[0] = {{0.5, -0.2, 0.1, 0.9}, {-0.4, 0.3, 0.8, -0.1}};
    batch.hard_negatives[2] = {{0.2, 0.2, -0.7, 0.5}};

    const LossResult base = weighted_infonce(batch);
    REQUIRE(base.grad_hard_negatives.size() == 3);
    REQUIRE(base.grad_hard_negatives[0].size() == 2);

    EmbeddingBatch without = batch;
    without.hard_negatives.clear();
    CHECK(weighted_infonce(without).loss < base.loss); // extra negatives raise the loss

    // FD check on a hard-negative coordinate.
    auto value = [&](EmbeddingBatch b) { return weighted_infonce(b).loss; };
    for (std::size_t t = 0; t < 4; ++t) {
        EmbeddingBatch up = batch;
        EmbeddingBatch down = batch;
        up.hard_negatives[0][1][t] += 1e-6;
        down.hard_negatives[0][1][t] -= 1e-6;
        const double fd = (value(up) - value(down)) / 2e-6;
        CHECK(test_support::rel_err(base.grad_hard_negatives[0][1][t], fd) <= 1e-5);
    }
}

TEST_CASE("batch parses from JSON") {
    const nlohmann::json j = {
        {"queries", {{1.0, 0.0}, {0.0, 1.0}}},
        {"documents", {{1.0, 0.1}, {0.2, 0.9}}},
        {"labels", {3, 1}},
        {"temperature", 0.07},
    };
    const EmbeddingBatch batch = EmbeddingBatch::from_json(j);
    CHECK(batch.queries.size() == 2);
    CHECK(batch.temperature == doctest::Approx(0.07));
    CHECK(weighted_infonce(batch).loss >= 0.0);
}
