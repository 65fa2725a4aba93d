// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ssra/corpus.hpp"
#include "ssra/loss.hpp"
#include "ssra/util.hpp"

// Shared fixtures and the brute-force oracles the metric/loss tests check
// against. Everything here is intentionally independent of the library's
// implementation path: the oracles restate the definitions from scratch.
namespace test_support {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("ssra-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter_++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    static inline int counter_ = 0;
    std::filesystem::path path_;
};

// --- random corpus generation -------------------------------------------------

inline std::string random_text(ssra::SplitMix64& rng, bool allow_cjk = true) {
    static const std::vector<std::string> ascii_words = {
        "cat", "video", "cooking", "travel", "music", "dance", "phone", "review"};
    static const std::vector<std::string> cjk_chars = {
        "猫", "视", "频", "烹", "饪", "旅", "行",
        "音", "乐", "舞", "蹈", "手", "机"};
    std::string out;
    const std::size_t n = 1 + rng.below(6);
    for (std::size_t i = 0; i < n; ++i) {
        if (allow_cjk && rng.below(2) == 0) {
            out += cjk_chars[rng.below(cjk_chars.size())];
        } else {
            if (!out.empty()) {
                out += ' ';
            }
            out += ascii_words[rng.below(ascii_words.size())];
        }
    }
    return out;
}

inline ssra::Corpus random_labeled_corpus(std::uint64_t seed, std::size_t n_records) {
    ssra::SplitMix64 rng(seed);
    ssra::Corpus corpus;
    for (std::size_t i = 0; i < n_records; ++i) {
        ssra::PairRecord rec;
        rec.query.query_id = "q" + std::to_string(i);
        rec.query.text = random_text(rng);
        rec.doc_id = "d" + std::to_string(rng.below(std::max<std::size_t>(1, n_records / 2)));
        rec.label = ssra::RelevanceLabel(static_cast<int>(rng.below(4)));
        rec.provenance = ssra::Provenance::annotated;
        if (rng.below(4) == 0) {
            rec.meta["note"] = random_text(rng, false);
        }
        corpus.records.push_back(std::move(rec));
    }
    return corpus;
}

inline bool records_equal(const ssra::PairRecord& a, const ssra::PairRecord& b) {
    const bool label_eq = a.label.has_value() == b.label.has_value() &&
                          (!a.label || a.label->value() == b.label->value());
    return a.query.query_id == b.query.query_id && a.query.text == b.query.text &&
           a.doc_id == b.doc_id && label_eq && a.provenance == b.provenance &&
           a.meta == b.meta;
}

inline bool corpora_equal(const ssra::Corpus& a, const ssra::Corpus& b) {
    if (a.records.size() != b.records.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        if (!records_equal(a.records[i], b.records[i])) {
            return false;
        }
    }
    return true;
}

// --- metric oracles -------------------------------------------------------------

inline double oracle_gain(int label, bool exponential) {
    return exponential ? std::pow(2.0, label) - 1.0 : static_cast<double>(label);
}

inline double oracle_dcg(const std::vector<int>& labels_in_rank_order, int k,
                         bool exponential) {
    double dcg = 0.0;
    for (std::size_t i = 0; i < labels_in_rank_order.size() && i < static_cast<std::size_t>(k);
         ++i) {
        dcg += oracle_gain(labels_in_rank_order[i], exponential) *
               (std::log(2.0) / std::log(static_cast<double>(i) + 2.0));
    }
    return dcg;
}

// Ideal DCG by exhaustive permutation of the judged labels (viable for <= 8
// docs), per the definition rather than the sort-descending shortcut.
inline double oracle_ideal_dcg_bruteforce(std::vector<int> labels, int k, bool exponential) {
    std::sort(labels.begin(), labels.end());
    double best = 0.0;
    do {
        best = std::max(best, oracle_dcg(labels, k, exponential));
    } while (std::next_permutation(labels.begin(), labels.end()));
    return best;
}

// Explicit precision-at-each-positive summation.
inline double oracle_average_precision(const std::vector<std::pair<double, int>>& pairs,
                                       int threshold) {
    std::vector<std::pair<double, int>> ranked = pairs;
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::size_t n_pos = 0;
    for (const auto& [score, label] : ranked) {
        (void)score;
        if (label >= threshold) {
            ++n_pos;
        }
    }
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (ranked[i].second >= threshold) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(n_pos);
}

// --- finite-difference gradient oracle -------------------------------------------

inline double loss_value(const ssra::loss::EmbeddingBatch& batch,
                         const ssra::loss::WeightFn& weight_fn) {
    return ssra::loss::weighted_infonce(batch, weight_fn).loss;
}

// Central finite differences, step 1e-6 per the gradient-check contract.
inline double fd_partial(ssra::loss::EmbeddingBatch batch, bool wrt_query, std::size_t row,
                         std::size_t col, const ssra::loss::WeightFn& weight_fn,
                         double h = 1e-6) {
    auto& mat = wrt_query ? batch.queries : batch.documents;
    const double original = mat[row][col];
    mat[row][col] = original + h;
    const double up = loss_value(batch, weight_fn);
    mat[row][col] = original - h;
    const double down = loss_value(batch, weight_fn);
    return (up - down) / (2.0 * h);
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline ssra::loss::EmbeddingBatch random_batch(std::uint64_t seed, std::size_t n,
                                               std::size_t dim, double tau) {
    ssra::SplitMix64 rng(seed);
    ssra::loss::EmbeddingBatch batch;
    batch.temperature = tau;
    for (std::size_t i = 0; i < n; ++i) {
        ssra::loss::Vec q(dim);
        ssra::loss::Vec d(dim);
        for (std::size_t t = 0; t < dim; ++t) {
            q[t] = rng.unit() * 2.0 - 1.0;
            d[t] = rng.unit() * 2.0 - 1.0;
        }
        batch.queries.push_back(std::move(q));
        batch.documents.push_back(std::move(d));
        batch.labels.push_back(static_cast<int>(rng.below(4)));
    }
    // At least one positive-weight anchor.
    batch.labels[0] = 3;
    return batch;
}

} // namespace test_support
