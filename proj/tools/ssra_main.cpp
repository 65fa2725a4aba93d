// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ssra/error.hpp"
#include "ssra/modelio.hpp"
#include "ssra/pipeline.hpp"
#include "ssra/util.hpp"

namespace {

int exit_code_for(ssra::ErrorKind kind) {
    switch (kind) {
    case ssra::ErrorKind::config: return 2;
    case ssra::ErrorKind::digest: return 4;
    default: return 3;
    }
}

void print_error(const std::string& kind, const std::string& message) {
    nlohmann::json j;
    j["error"] = {{"kind", kind}, {"message", message}};
    std::cerr << j.dump() << "\n";
}

struct GlobalOptions {
    std::string config_path;
    std::string workdir;
    std::optional<std::uint64_t> seed;
    bool mock = false;
    std::optional<int> concurrency;
};

ssra::pipeline::PipelineConfig load_config(const GlobalOptions& opts) {
    ssra::pipeline::PipelineConfig config;
    if (!opts.config_path.empty()) {
        config = ssra::pipeline::PipelineConfig::load(opts.config_path);
    }
    if (!opts.workdir.empty()) {
        config.workdir = opts.workdir;
    }
    if (opts.seed) {
        config.params.seed = *opts.seed;
    }
    if (opts.mock) {
        config.force_mock_backends();
    }
    if (opts.concurrency) {
        config.override_concurrency(*opts.concurrency);
    }
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SSRA relevance-aware data synthesis pipeline"};
    app.require_subcommand(1);

    GlobalOptions opts;
    app.add_option("--config", opts.config_path, "pipeline config JSON")
        ->envname("SSRA_CONFIG");
    app.add_option("--workdir", opts.workdir, "working directory (overrides config)");
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "run seed (overrides config)");
    opts.mock = false;
    app.add_flag("--mock", opts.mock, "force mock backends for every model role");
    int concurrency_value = 0;
    auto* conc_opt =
        app.add_option("--concurrency", concurrency_value, "max in-flight model calls");

    // Pipeline stages in workdir order.
    std::vector<std::pair<CLI::App*, std::string>> stage_cmds;
    auto add_stage = [&](const std::string& name, const std::string& desc) {
        stage_cmds.emplace_back(app.add_subcommand(name, desc), name);
        return stage_cmds.back().first;
    };
    add_stage("ingest", "validate and canonicalize the configured input files");
    add_stage("rewrite", "fill empty document bodies via the rewrite model");
    add_stage("dedup", "deduplicate the labeled corpus per (query,label)");
    add_stage("stage1", "score-based re-annotation and D2Q merge");
    add_stage("synth", "relevance-conditioned query synthesis");
    add_stage("filter-score", "keep synthetic pairs whose predicted label matches");
    add_stage("filter-pairwise", "drop label-order-inconsistent query pairs");
    add_stage("assemble", "combine refined synthetic data with the stage1 corpus");

    auto* synth_cmd = stage_cmds[4].first;
    std::size_t synth_docs = 0;
    auto* synth_docs_opt =
        synth_cmd->add_option("--docs-sample", synth_docs, "synthesize over a seeded sample");
    int per_doc = 0;
    auto* per_doc_opt =
        synth_cmd->add_option("--per-doc", per_doc, "queries per (doc,label) slot");

    std::string in_path;
    auto* stats_cmd = add_stage("stats", "corpus statistics report");
    stats_cmd->add_option("--in", in_path, "corpus to analyze");

    auto* subset_cmd = app.add_subcommand("subset", "binary or balanced subset construction");
    std::string subset_mode;
    subset_cmd->add_option("mode", subset_mode, "binary|balanced")->required();
    subset_cmd->add_option("--in", in_path, "corpus to subset");
    std::size_t n_per_label = 0;
    auto* n_opt = subset_cmd->add_option("--n", n_per_label, "records per label (balanced)");

    auto* evalr_cmd = add_stage("eval-retrieval", "nDCG@k over qrels and a run file");
    std::string qrels_path;
    std::string run_path;
    evalr_cmd->add_option("--qrels", qrels_path, "TSV query_id<TAB>doc_id<TAB>label");
    evalr_cmd->add_option("--run", run_path, "TSV query_id<TAB>doc_id<TAB>score");
    int ndcg_k = 0;
    auto* k_opt = evalr_cmd->add_option("--k", ndcg_k, "cutoff");
    std::string gain_name;
    auto* gain_opt = evalr_cmd->add_option("--gain", gain_name, "linear|exponential");

    auto* evalp_cmd = add_stage("eval-pairclass", "AP at label thresholds");
    evalp_cmd->add_option("--qrels", qrels_path, "TSV query_id<TAB>doc_id<TAB>label");
    evalp_cmd->add_option("--run", run_path, "TSV query_id<TAB>doc_id<TAB>score");
    std::vector<int> thresholds;
    auto* thresholds_opt = evalp_cmd->add_option("--thresholds", thresholds, "e.g. 1 2 3");

    auto* diversity_cmd = add_stage("diversity", "duplicate-rate report over queries");
    diversity_cmd->add_option("--in", in_path, ".jsonl corpus or plain-text query lines");
    std::string diversity_baseline;
    diversity_cmd->add_option("--baseline", diversity_baseline,
                              "baseline pool for the relative-decrease figure");

    auto* consistency_cmd = add_stage("consistency", "target-vs-judged label consistency");
    std::string pairs_path;
    std::string baseline_path;
    consistency_cmd->add_option("--pairs", pairs_path, "target<TAB>judged lines");
    consistency_cmd->add_option("--baseline", baseline_path, "baseline pairs for improvement");

    auto* loss_cmd = add_stage("loss-check", "weighted InfoNCE loss and gradient norms");
    std::string batch_path;
    loss_cmd->add_option("--batch", batch_path, "batch JSON document");
    std::string weight_fn;
    auto* weight_opt = loss_cmd->add_option("--weight-fn", weight_fn,
                                            "label_over_3|binary|uniform");
    double tau = 0.0;
    auto* tau_opt = loss_cmd->add_option("--tau", tau, "temperature when the batch omits it");

    auto* report_cmd = app.add_subcommand("report", "consolidated report over all manifests");

    CLI11_PARSE(app, argc, argv);

    if (seed_opt->count() > 0) opts.seed = seed_value;
    if (conc_opt->count() > 0) opts.concurrency = concurrency_value;

    try {
        ssra::pipeline::PipelineConfig config = load_config(opts);

        // Per-subcommand overrides.
        if (stats_cmd->parsed() && !in_path.empty()) config.params.stats_input = in_path;
        if (subset_cmd->parsed() && !in_path.empty()) config.params.subset_input = in_path;
        if (diversity_cmd->parsed() && !in_path.empty()) config.params.diversity_input = in_path;
        if (!diversity_baseline.empty()) config.params.diversity_baseline = diversity_baseline;
        if (n_opt->count() > 0) config.params.n_per_label = n_per_label;
        if (!qrels_path.empty()) config.params.qrels = qrels_path;
        if (!run_path.empty()) config.params.run = run_path;
        if (k_opt->count() > 0) config.params.ndcg_k = ndcg_k;
        if (gain_opt->count() > 0) {
            if (gain_name == "linear") {
                config.params.gain = ssra::metrics::GainFunction::linear;
            } else if (gain_name == "exponential") {
                config.params.gain = ssra::metrics::GainFunction::exponential;
            } else {
                throw ssra::Error(ssra::ErrorKind::config, "unknown gain: " + gain_name);
            }
        }
        if (thresholds_opt->count() > 0) config.params.ap_thresholds = thresholds;
        if (!pairs_path.empty()) config.params.consistency_current = pairs_path;
        if (!baseline_path.empty()) config.params.consistency_baseline = baseline_path;
        if (!batch_path.empty()) config.params.loss_batch = batch_path;
        if (weight_opt->count() > 0) config.params.weight_fn = weight_fn;
        if (tau_opt->count() > 0) config.params.tau = tau;
        if (synth_docs_opt->count() > 0) config.params.synth_docs = synth_docs;
        if (per_doc_opt->count() > 0) config.params.per_doc_per_label = per_doc;

        if (report_cmd->parsed()) {
            ssra::pipeline::Pipeline pipeline(config);
            const nlohmann::json report = pipeline.consolidated_report();
            const auto out_path = config.workdir / "report" / "report.json";
            ssra::write_file(out_path, report.dump(2) + "\n");
            std::cout << ssra::pipeline::Pipeline::report_table(report);
            std::cout << "report written to " << out_path.string() << "\n";
            return 0;
        }

        std::string stage_name;
        if (subset_cmd->parsed()) {
            if (subset_mode == "binary") {
                stage_name = "subset-binary";
            } else if (subset_mode == "balanced") {
                stage_name = "subset-balanced";
            } else {
                throw ssra::Error(ssra::ErrorKind::config,
                                  "subset mode must be binary or balanced");
            }
        } else {
            for (const auto& [cmd, name] : stage_cmds) {
                if (cmd->parsed()) {
                    stage_name = name;
                    break;
                }
            }
        }
        if (stage_name.empty()) {
            throw ssra::Error(ssra::ErrorKind::config, "no subcommand selected");
        }

        ssra::pipeline::WorkdirLock lock(config.workdir);
        ssra::pipeline::Pipeline pipeline(config);
        const bool executed = pipeline.run(stage_name);
        std::cout << "stage " << stage_name << (executed ? ": done" : ": up to date") << "\n";
        return 0;
    } catch (const ssra::Error& e) {
        print_error("error", e.what());
        return exit_code_for(e.kind());
    } catch (const ssra::modelio::ModelError& e) {
        print_error(ssra::modelio::to_string(e.kind()), e.what());
        return 3;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 3;
    }
}
