// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssra/corpus.hpp"
#include "ssra/modelio.hpp"

// Stage 1: re-annotate unlabeled query-document pairs with the score model,
// regroup them document-first (D2Q), and merge with the deduplicated labeled
// corpus to form the query-model training corpus.
namespace ssra::stage1 {

struct Stage1Options {
    int max_concurrency = 8;
    // Score-model label-0 pairs stay in the corpus by default; they still
    // describe the document's query neighborhood even though the query model
    // only trains on targets 1-3.
    bool include_label0 = true;
};

struct Stage1Report {
    std::size_t n_unlabeled_in = 0;
    std::size_t n_scored = 0;
    std::size_t n_parse_failures = 0; // any per-pair scoring failure
    std::size_t n_label0_excluded = 0;
    std::array<std::size_t, 4> label_histogram{};
    std::vector<std::string> failure_messages;

    nlohmann::json to_json() const;
};

struct Stage1Output {
    std::vector<D2QGroup> d2q;
    Corpus merged;
    Stage1Report report;
};

// Scores every unlabeled pair; survivors carry provenance stage1_relabel.
// Failures land in the report, never silently dropped.
std::vector<PairRecord> relabel(const Corpus& unlabeled, modelio::ScoreClient& score_client,
                                const Stage1Options& options, Stage1Report& report);

// One group per distinct doc_id in first-appearance order; duplicate
// normalized queries within a group keep their first entry.
std::vector<D2QGroup> group_d2q(const std::vector<PairRecord>& labeled_pairs);

// Union of the deduplicated labeled corpus and the relabeled pairs, keyed on
// (normalized query, doc_id); the annotated record wins every collision.
Corpus merge_stage1(const std::vector<PairRecord>& relabeled, const Corpus& deduped_labeled);

Stage1Output run_stage1(const Corpus& unlabeled, const Corpus& deduped_labeled,
                        modelio::ScoreClient& score_client, const Stage1Options& options = {});

void save_d2q(const std::vector<D2QGroup>& groups, const std::filesystem::path& path);
std::vector<D2QGroup> load_d2q(const std::filesystem::path& path);

} // namespace ssra::stage1
