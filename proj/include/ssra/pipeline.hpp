// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssra/corpus.hpp"
#include "ssra/manifest.hpp"
#include "ssra/metrics.hpp"
#include "ssra/modelio.hpp"

namespace ssra::pipeline {

enum class BackendKind {
    http,
    mock_table,     // score: explicit fixtures from the mock_fixtures file
    mock_heuristic, // score: token-overlap heuristic
    mock_pattern,   // score: embedded-target pattern + heuristic fallback
    mock_template,  // query: seeded "mock-q(doc,label)" generator
    mock_relevance, // judge: true-relevance table / pattern / seeded hash
    mock_rewrite,   // rewrite: deterministic join
};

std::string to_string(BackendKind k);
BackendKind backend_from_string(const std::string& s);

struct RoleEndpoint {
    BackendKind backend = BackendKind::http;
    modelio::EndpointConfig endpoint;
};

struct PipelineParams {
    std::uint64_t seed = 42;
    std::vector<int> target_labels = {1, 2, 3};
    int per_doc_per_label = 1;
    std::size_t synth_docs = 0; // 0 = synthesize over every doc
    std::size_t n_per_label = 60;
    int ndcg_k = 10;
    metrics::GainFunction gain = metrics::GainFunction::linear;
    std::vector<int> ap_thresholds = {1, 2, 3};
    double tau = 0.05;
    std::string weight_fn = "label_over_3"; // label_over_3 | binary | uniform
    bool include_label0 = true;
    LengthMetric length_metric = LengthMetric::chars;
    bool exclude_all_zero = false;
    bool strict_unjudged = false;

    // Explicit inputs for the evaluation subcommands; stage outputs are the
    // defaults where one exists.
    std::string stats_input;
    std::string subset_input;
    std::string diversity_input;
    std::string diversity_baseline;
    std::string qrels;
    std::string run;
    std::string consistency_current;
    std::string consistency_baseline;
    std::string loss_batch;
};

struct PipelineConfig {
    std::filesystem::path labeled;
    std::filesystem::path unlabeled;
    std::filesystem::path docs;
    std::filesystem::path workdir = "work";

    RoleEndpoint score;
    RoleEndpoint query;
    RoleEndpoint judge;
    RoleEndpoint rewrite;

    std::optional<std::filesystem::path> mock_fixtures;
    std::map<std::string, std::filesystem::path> template_overrides;

    PipelineParams params;

    // Parses the config document; relative paths resolve against base_dir.
    // SSRA_BASE_URL / SSRA_API_KEY environment overrides are applied here.
    static PipelineConfig load(const std::filesystem::path& config_path);
    static PipelineConfig from_json(const nlohmann::json& j,
                                    const std::filesystem::path& base_dir);

    void force_mock_backends();
    void override_concurrency(int max_concurrency);

    nlohmann::json to_json() const;
};

struct ModelSet {
    std::unique_ptr<modelio::ScoreClient> score;
    std::unique_ptr<modelio::QueryClient> query;
    std::unique_ptr<modelio::JudgeClient> judge;
    std::unique_ptr<modelio::RewriteClient> rewrite;
};

ModelSet build_models(const PipelineConfig& config);

// Holds workdir/.ssra_lock for the lifetime of a run; a second concurrent
// run against the same workdir fails fast.
class WorkdirLock {
public:
    explicit WorkdirLock(const std::filesystem::path& workdir);
    ~WorkdirLock();
    WorkdirLock(const WorkdirLock&) = delete;
    WorkdirLock& operator=(const WorkdirLock&) = delete;

private:
    std::filesystem::path lock_path_;
    bool held_ = false;
};

// Orchestrates the stages. Every stage writes its outputs plus a manifest
// under workdir/<stage>/; reruns with unchanged inputs and settings are
// no-ops, and consuming a stage whose outputs changed on disk aborts with a
// digest error.
class Pipeline {
public:
    explicit Pipeline(PipelineConfig config);

    // Valid names: ingest, rewrite, dedup, stage1, synth, filter-score,
    // filter-pairwise, assemble, subset-binary, subset-balanced, stats,
    // eval-retrieval, eval-pairclass, diversity, consistency, loss-check.
    // Returns false when the stage was already up to date.
    bool run(const std::string& stage_name);

    static const std::vector<std::string>& stage_names();

    // Consolidated report over every manifest in the workdir.
    nlohmann::json consolidated_report() const;
    static std::string report_table(const nlohmann::json& report);

    const PipelineConfig& config() const { return config_; }

private:
    struct StageOutcome {
        std::vector<std::string> outputs; // filenames inside the stage dir
        StageCounts counts;
        nlohmann::json report; // stage report.json content, or null
    };

    bool run_stage(const std::string& name, const std::vector<std::filesystem::path>& inputs,
                   const std::function<StageOutcome(const std::filesystem::path& stage_dir)>& body);

    // Digest-verified path to an upstream stage's output file.
    std::filesystem::path consume(const std::string& stage, const std::string& filename) const;
    bool stage_done(const std::string& stage) const;
    std::filesystem::path docs_file() const; // rewrite output when present, else ingest
    Corpus load_stage_corpus(const std::filesystem::path& records, CorpusSchema schema,
                             bool attach_docs) const;

    StageOutcome do_ingest(const std::filesystem::path& dir);
    StageOutcome do_rewrite(const std::filesystem::path& dir);
    StageOutcome do_dedup(const std::filesystem::path& dir);
    StageOutcome do_stage1(const std::filesystem::path& dir);
    StageOutcome do_synth(const std::filesystem::path& dir);
    StageOutcome do_filter_score(const std::filesystem::path& dir);
    StageOutcome do_filter_pairwise(const std::filesystem::path& dir);
    StageOutcome do_assemble(const std::filesystem::path& dir);
    StageOutcome do_subset_binary(const std::filesystem::path& dir);
    StageOutcome do_subset_balanced(const std::filesystem::path& dir);
    StageOutcome do_stats(const std::filesystem::path& dir);
    StageOutcome do_eval_retrieval(const std::filesystem::path& dir);
    StageOutcome do_eval_pairclass(const std::filesystem::path& dir);
    StageOutcome do_diversity(const std::filesystem::path& dir);
    StageOutcome do_consistency(const std::filesystem::path& dir);
    StageOutcome do_loss_check(const std::filesystem::path& dir);

    std::vector<std::filesystem::path> stage_inputs(const std::string& name) const;

    PipelineConfig config_;
    nlohmann::json semantic_snapshot_;
};

double weight_fn_value(const std::string& name, int label);

} // namespace ssra::pipeline
