// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssra/corpus.hpp"
#include "ssra/modelio.hpp"

// Stage 2: relevance-conditioned synthesis over unlabeled documents, then
// score-based filtering and pairwise consistency filtering, then assembly of
// the enriched corpus.
namespace ssra::stage2 {

struct SynthesisPlan {
    std::vector<std::string> doc_ids;
    std::vector<RelevanceLabel> target_labels; // non-empty subset of {1,2,3}
    int per_doc_per_label = 1;

    void validate() const;
};

enum class FilterVerdict { kept, dropped_score_mismatch, dropped_pairwise_inconsistent };

std::string to_string(FilterVerdict v);

// One decision per synthetic record per filter pass.
struct FilterDecision {
    std::string query_id;
    std::string doc_id;
    FilterVerdict verdict = FilterVerdict::kept;
    std::optional<int> predicted_label;
    std::optional<std::string> counterpart_query_id;
    std::optional<std::string> verdict_token;
    std::optional<std::string> error;

    nlohmann::ordered_json to_json() const;
};

// One judged (lower-label, higher-label) query pair within a document.
struct PairJudgment {
    std::string doc_id;
    std::string query_a_id; // lower label, presented as A
    std::string query_b_id;
    int label_a = 0;
    int label_b = 0;
    std::string verdict_token; // "A" | "B" | "tie" | "error"
    bool inconsistent = false;
    std::optional<std::string> error;

    nlohmann::ordered_json to_json() const;
};

struct SynthesisResult {
    Corpus synthetic; // provenance synthetic_raw, meta.target_label set
    std::vector<std::string> failures; // one message per failed (doc,label,k) slot
};

// Generates per_doc_per_label queries per (doc, target label). Query ids are
// deterministic: "syn-<doc_id>-s<label>-<k>".
SynthesisResult synthesize(const SynthesisPlan& plan, const Corpus& docs,
                           modelio::QueryClient& query_client, int max_concurrency);

struct ScoreFilterResult {
    Corpus kept; // provenance synthetic_filtered
    std::vector<FilterDecision> decisions;
};

// Keeps a record iff the score model's predicted label equals
// meta.target_label; a scoring failure drops the record with its error.
ScoreFilterResult filter_by_score(const Corpus& synthetic, modelio::ScoreClient& score_client,
                                  int max_concurrency);

struct PairwiseFilterResult {
    Corpus refined;
    std::vector<FilterDecision> decisions;
    std::vector<PairJudgment> judgments;
};

// Judges every unordered pair of same-document queries with differing
// labels, lower label presented as A. A pair is inconsistent iff the verdict
// names the lower-labeled query more relevant (ties are consistent); both
// members of an inconsistent pair are dropped. A judge failure counts as
// inconsistent.
PairwiseFilterResult filter_pairwise(const Corpus& kept, modelio::JudgeClient& judge_client,
                                     int max_concurrency);

// Union with the Stage-1 corpus, keyed on (normalized query, doc_id); the
// non-synthetic record wins every collision.
Corpus assemble_enriched(const Corpus& refined_synthetic, const Corpus& stage1_corpus);

void save_decisions(const std::vector<FilterDecision>& decisions,
                    const std::filesystem::path& path);
void save_judgments(const std::vector<PairJudgment>& judgments,
                    const std::filesystem::path& path);

} // namespace ssra::stage2
