// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace ssra::metrics {

// Graded judgments: query_id -> (doc_id -> label in {0,1,2,3}).
struct Qrels {
    std::map<std::string, std::map<std::string, int>> judgments;
};

// A retrieval run. Rankings are canonicalized on construction: sorted by
// (score desc, doc_id asc), duplicate doc_ids per query rejected.
struct RunRanking {
    std::map<std::string, std::vector<std::pair<std::string, double>>> rankings;

    static RunRanking from_entries(
        const std::vector<std::tuple<std::string, std::string, double>>& entries);
};

enum class GainFunction { linear, exponential };

struct NdcgOptions {
    GainFunction gain = GainFunction::linear;
    // Unjudged docs score gain 0 by default; strict mode errors instead.
    bool strict_unjudged = false;
    // Queries whose judged labels are all zero score 0 and count in the mean
    // by default; they can be excluded instead.
    bool exclude_all_zero = false;
};

struct NdcgResult {
    std::vector<std::pair<std::string, double>> per_query; // run order (sorted by query_id)
    double mean = 0.0;
    std::size_t n_evaluated = 0;
    std::size_t n_all_zero = 0;
    nlohmann::json to_json(int k) const;
};

// DCG = sum_{i<=k} g(rel_i)/log2(i+1); per-query nDCG = DCG/IDCG with the
// ideal ordering taken over all judged docs for the query.
NdcgResult ndcg_at_k(const Qrels& qrels, const RunRanking& run, int k,
                     const NdcgOptions& options = {});

struct ApResult {
    double ap = 0.0;
    std::size_t n_pairs = 0;
    std::size_t n_positives = 0;
    // Pairs whose score equals some other pair's score; ties are resolved by
    // stable input order, so a nonzero count flags tie-sensitive results.
    std::size_t n_tied_scores = 0;
    nlohmann::json to_json(int threshold) const;
};

// Binarizes positive := label >= threshold, ranks by (score desc, stable
// input order), AP = (1/P) * sum over positive ranks of precision@rank.
ApResult average_precision_at_threshold(
    const std::vector<std::pair<double, int>>& scored_pairs, int threshold);

struct DiversityReport {
    std::size_t total = 0;
    std::size_t unique = 0;
    double duplicate_rate = 0.0; // (total - unique) / total
    std::map<std::size_t, std::size_t> histogram; // frequency -> #distinct queries
    nlohmann::json to_json() const;
};

// Exact-match duplicate counting over normalized query text.
DiversityReport duplicate_rate(const std::vector<std::string>& queries);

struct ConsistencyReport {
    struct Row {
        std::size_t matched = 0;
        std::size_t total = 0;
        double rate() const { return total == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(total); }
    };
    std::map<int, Row> per_target;
    Row overall;
    nlohmann::json to_json() const;
};

ConsistencyReport consistency_rate(const std::vector<std::pair<int, int>>& target_judged);

// (r2 - r1) / r1, in percent.
double relative_improvement_percent(const ConsistencyReport& before,
                                    const ConsistencyReport& after);

// Relative decrease between two duplicate rates, computed on the 2-decimal
// rounded percent values the reports print.
double relative_decrease_percent(const DiversityReport& before,
                                 const DiversityReport& after);

// Round-half-even at `decimals` places; all reported percentages use 2.
double round_half_even(double value, int decimals);
inline double percent2(double fraction) { return round_half_even(100.0 * fraction, 2); }

// --- file formats -----------------------------------------------------------

// Qrels: TSV "query_id\tdoc_id\tlabel". Run: TSV "query_id\tdoc_id\tscore".
Qrels load_qrels(const std::filesystem::path& path);
RunRanking load_run(const std::filesystem::path& path);

// Joins run scores with qrels labels on (query_id, doc_id) for the pair
// classification task. Unjudged docs get label 0 unless strict.
std::vector<std::pair<double, int>> join_scored_pairs(const Qrels& qrels,
                                                      const RunRanking& run,
                                                      bool strict_unjudged = false);

} // namespace ssra::metrics
