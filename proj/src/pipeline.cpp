// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#include "ssra/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ssra/batch.hpp"
#include "ssra/http_client.hpp"
#include "ssra/loss.hpp"
#include "ssra/mock_clients.hpp"
#include "ssra/stage1.hpp"
#include "ssra/stage2.hpp"
#include "ssra/text.hpp"
#include "ssra/util.hpp"

namespace ssra::pipeline {

namespace fs = std::filesystem;

std::string to_string(BackendKind k) {
    switch (k) {
    case BackendKind::http: return "http";
    case BackendKind::mock_table: return "mock_table";
    case BackendKind::mock_heuristic: return "mock_heuristic";
    case BackendKind::mock_pattern: return "mock_pattern";
    case BackendKind::mock_template: return "mock_template";
    case BackendKind::mock_relevance: return "mock_relevance";
    case BackendKind::mock_rewrite: return "mock_rewrite";
    }
    throw Error(ErrorKind::config, "invalid backend kind");
}

BackendKind backend_from_string(const std::string& s) {
    if (s == "http") return BackendKind::http;
    if (s == "mock_table") return BackendKind::mock_table;
    if (s == "mock_heuristic") return BackendKind::mock_heuristic;
    if (s == "mock_pattern") return BackendKind::mock_pattern;
    if (s == "mock_template") return BackendKind::mock_template;
    if (s == "mock_relevance") return BackendKind::mock_relevance;
    if (s == "mock_rewrite") return BackendKind::mock_rewrite;
    throw Error(ErrorKind::config, "unknown backend: " + s);
}

double weight_fn_value(const std::string& name, int label) {
    if (name == "label_over_3") return static_cast<double>(label) / 3.0;
    if (name == "binary") return label > 0 ? 1.0 : 0.0;
    if (name == "uniform") return 1.0;
    throw Error(ErrorKind::config, "unknown weight_fn: " + name);
}

// --- config -----------------------------------------------------------------

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) {
        return {};
    }
    fs::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

RoleEndpoint default_role(BackendKind kind, double temperature) {
    RoleEndpoint role;
    role.backend = kind;
    role.endpoint.temperature = temperature;
    return role;
}

RoleEndpoint parse_role(const nlohmann::json& j, RoleEndpoint defaults) {
    RoleEndpoint role = std::move(defaults);
    if (j.contains("backend")) {
        role.backend = backend_from_string(j.at("backend").get<std::string>());
    }
    nlohmann::json merged = role.endpoint.to_json();
    merged.update(j);
    merged.erase("backend");
    role.endpoint = modelio::EndpointConfig::from_json(merged);
    return role;
}

std::vector<int> parse_labels(const nlohmann::json& j, const char* what) {
    std::vector<int> labels = j.get<std::vector<int>>();
    for (int v : labels) {
        if (v < 0 || v > 3) {
            throw Error(ErrorKind::config, std::string(what) + ": label out of range");
        }
    }
    return labels;
}

} // namespace

PipelineConfig PipelineConfig::load(const fs::path& config_path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(config_path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::config,
                    "bad config " + config_path.string() + ": " + e.what());
    } catch (const Error&) {
        throw Error(ErrorKind::config, "cannot read config: " + config_path.string());
    }
    return from_json(j, config_path.has_parent_path() ? config_path.parent_path() : ".");
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j, const fs::path& base_dir) {
    if (!j.is_object()) {
        throw Error(ErrorKind::config, "config root must be a JSON object");
    }
    PipelineConfig cfg;
    cfg.score = default_role(BackendKind::mock_pattern, 0.0);
    cfg.query = default_role(BackendKind::mock_template, 0.7);
    cfg.judge = default_role(BackendKind::mock_relevance, 0.0);
    cfg.rewrite = default_role(BackendKind::mock_rewrite, 0.7);

    try {
        if (j.contains("paths")) {
            const auto& p = j.at("paths");
            cfg.labeled = resolve(base_dir, p.value("labeled", std::string{}));
            cfg.unlabeled = resolve(base_dir, p.value("unlabeled", std::string{}));
            cfg.docs = resolve(base_dir, p.value("docs", std::string{}));
            cfg.workdir = resolve(base_dir, p.value("workdir", std::string{"work"}));
        }
        if (j.contains("endpoints")) {
            const auto& e = j.at("endpoints");
            if (e.contains("score")) cfg.score = parse_role(e.at("score"), cfg.score);
            if (e.contains("query")) cfg.query = parse_role(e.at("query"), cfg.query);
            if (e.contains("judge")) cfg.judge = parse_role(e.at("judge"), cfg.judge);
            if (e.contains("rewrite")) cfg.rewrite = parse_role(e.at("rewrite"), cfg.rewrite);
        }
        if (j.contains("mock_fixtures")) {
            cfg.mock_fixtures = resolve(base_dir, j.at("mock_fixtures").get<std::string>());
        }
        if (j.contains("templates")) {
            for (const auto& [role, path] : j.at("templates").items()) {
                cfg.template_overrides[role] = resolve(base_dir, path.get<std::string>());
            }
        }
        if (j.contains("params")) {
            const auto& p = j.at("params");
            PipelineParams& params = cfg.params;
            params.seed = p.value("seed", params.seed);
            if (p.contains("target_labels")) {
                params.target_labels = parse_labels(p.at("target_labels"), "target_labels");
            }
            params.per_doc_per_label = p.value("per_doc_per_label", params.per_doc_per_label);
            params.synth_docs = p.value("synth_docs", params.synth_docs);
            params.n_per_label = p.value("n_per_label", params.n_per_label);
            params.ndcg_k = p.value("ndcg_k", params.ndcg_k);
            if (p.contains("gain")) {
                const std::string g = p.at("gain").get<std::string>();
                if (g == "linear") {
                    params.gain = metrics::GainFunction::linear;
                } else if (g == "exponential") {
                    params.gain = metrics::GainFunction::exponential;
                } else {
                    throw Error(ErrorKind::config, "unknown gain function: " + g);
                }
            }
            if (p.contains("ap_thresholds")) {
                params.ap_thresholds = parse_labels(p.at("ap_thresholds"), "ap_thresholds");
            }
            params.tau = p.value("tau", params.tau);
            params.weight_fn = p.value("weight_fn", params.weight_fn);
            params.include_label0 = p.value("include_label0", params.include_label0);
            if (p.contains("length_metric")) {
                const std::string m = p.at("length_metric").get<std::string>();
                if (m == "chars") {
                    params.length_metric = LengthMetric::chars;
                } else if (m == "ws_tokens") {
                    params.length_metric = LengthMetric::ws_tokens;
                } else {
                    throw Error(ErrorKind::config, "unknown length_metric: " + m);
                }
            }
            params.exclude_all_zero = p.value("exclude_all_zero", params.exclude_all_zero);
            params.strict_unjudged = p.value("strict_unjudged", params.strict_unjudged);
            auto path_param = [&](const char* key) {
                return p.contains(key) ? resolve(base_dir, p.at(key).get<std::string>()).string()
                                       : std::string{};
            };
            params.stats_input = path_param("stats_input");
            params.subset_input = path_param("subset_input");
            params.diversity_input = path_param("diversity_input");
            params.diversity_baseline = path_param("diversity_baseline");
            params.qrels = path_param("qrels");
            params.run = path_param("run");
            params.consistency_current = path_param("consistency_current");
            params.consistency_baseline = path_param("consistency_baseline");
            params.loss_batch = path_param("loss_batch");
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::config, std::string("bad config: ") + e.what());
    }

    if (const char* base_url = std::getenv("SSRA_BASE_URL")) {
        for (RoleEndpoint* role : {&cfg.score, &cfg.query, &cfg.judge, &cfg.rewrite}) {
            role->endpoint.base_url = base_url;
        }
    }
    return cfg;
}

void PipelineConfig::force_mock_backends() {
    score.backend = BackendKind::mock_pattern;
    query.backend = BackendKind::mock_template;
    judge.backend = BackendKind::mock_relevance;
    rewrite.backend = BackendKind::mock_rewrite;
}

void PipelineConfig::override_concurrency(int max_concurrency) {
    for (RoleEndpoint* role : {&score, &query, &judge, &rewrite}) {
        role->endpoint.max_concurrency = max_concurrency;
        role->endpoint.validate();
    }
}

nlohmann::json PipelineConfig::to_json() const {
    auto role_json = [](const RoleEndpoint& role) {
        nlohmann::json j = role.endpoint.to_json();
        j["backend"] = to_string(role.backend);
        return j;
    };
    nlohmann::json j;
    j["paths"] = {{"labeled", labeled.string()},
                  {"unlabeled", unlabeled.string()},
                  {"docs", docs.string()},
                  {"workdir", workdir.string()}};
    j["endpoints"] = {{"score", role_json(score)},
                      {"judge", role_json(judge)},
                      {"query", role_json(query)},
                      {"rewrite", role_json(rewrite)}};
    if (mock_fixtures) {
        j["mock_fixtures"] = mock_fixtures->string();
    }
    if (!template_overrides.empty()) {
        nlohmann::json t = nlohmann::json::object();
        for (const auto& [role, path] : template_overrides) {
            t[role] = path.string();
        }
        j["templates"] = t;
    }
    const PipelineParams& p = params;
    j["params"] = {
        {"seed", p.seed},
        {"target_labels", p.target_labels},
        {"per_doc_per_label", p.per_doc_per_label},
        {"synth_docs", p.synth_docs},
        {"n_per_label", p.n_per_label},
        {"ndcg_k", p.ndcg_k},
        {"gain", p.gain == metrics::GainFunction::linear ? "linear" : "exponential"},
        {"ap_thresholds", p.ap_thresholds},
        {"tau", p.tau},
        {"weight_fn", p.weight_fn},
        {"include_label0", p.include_label0},
        {"length_metric", p.length_metric == LengthMetric::chars ? "chars" : "ws_tokens"},
        {"exclude_all_zero", p.exclude_all_zero},
        {"strict_unjudged", p.strict_unjudged},
        {"stats_input", p.stats_input},
        {"subset_input", p.subset_input},
        {"diversity_input", p.diversity_input},
        {"diversity_baseline", p.diversity_baseline},
        {"qrels", p.qrels},
        {"run", p.run},
        {"consistency_current", p.consistency_current},
        {"consistency_baseline", p.consistency_baseline},
        {"loss_batch", p.loss_batch},
    };
    return j;
}

// --- model construction -------------------------------------------------------

namespace {

nlohmann::json load_fixtures(const PipelineConfig& cfg) {
    if (!cfg.mock_fixtures) {
        return nlohmann::json::object();
    }
    try {
        return nlohmann::json::parse(read_file(*cfg.mock_fixtures));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::config,
                    "bad mock fixtures " + cfg.mock_fixtures->string() + ": " + e.what());
    }
}

modelio::ModelErrorKind error_kind_from_string(const std::string& s) {
    if (s == "endpoint") return modelio::ModelErrorKind::endpoint;
    if (s == "score_parse") return modelio::ModelErrorKind::score_parse;
    if (s == "judge_parse") return modelio::ModelErrorKind::judge_parse;
    if (s == "generation") return modelio::ModelErrorKind::generation;
    throw Error(ErrorKind::config, "unknown model error kind: " + s);
}

modelio::RoleTemplates templates_with_overrides(const PipelineConfig& cfg) {
    modelio::RoleTemplates t = modelio::RoleTemplates::defaults();
    for (const auto& [role, path] : cfg.template_overrides) {
        if (role == "score") {
            t.score = modelio::PromptTemplate::load_file(path, "score-file",
                                                         modelio::OutputGrammar::score_line);
        } else if (role == "query") {
            t.query = modelio::PromptTemplate::load_file(path, "query-file",
                                                         modelio::OutputGrammar::plain_query);
        } else if (role == "judge") {
            t.judge = modelio::PromptTemplate::load_file(path, "judge-file",
                                                         modelio::OutputGrammar::order_token);
        } else if (role == "rewrite") {
            t.rewrite = modelio::PromptTemplate::load_file(path, "rewrite-file",
                                                           modelio::OutputGrammar::rewrite_text);
        } else if (role == "reasoning") {
            t.reasoning = modelio::PromptTemplate::load_file(
                path, "reasoning-file", modelio::OutputGrammar::reasoning_then_score);
        } else {
            throw Error(ErrorKind::config, "unknown template role: " + role);
        }
    }
    return t;
}

std::string api_key_from_env() {
    const char* key = std::getenv("SSRA_API_KEY");
    return key ? key : "";
}

} // namespace

ModelSet build_models(const PipelineConfig& cfg) {
    const nlohmann::json fixtures = load_fixtures(cfg);
    const modelio::RoleTemplates templates = templates_with_overrides(cfg);
    ModelSet models;

    switch (cfg.score.backend) {
    case BackendKind::http:
        models.score = std::make_unique<modelio::HttpModelClient>(cfg.score.endpoint,
                                                                  api_key_from_env(), templates);
        break;
    case BackendKind::mock_heuristic:
        models.score = std::make_unique<modelio::mock::HeuristicScoreMock>();
        break;
    case BackendKind::mock_table: {
        auto table = std::make_unique<modelio::mock::TableScoreMock>();
        if (fixtures.contains("score")) {
            for (const auto& e : fixtures.at("score").value("entries", nlohmann::json::array())) {
                std::optional<std::string> rationale;
                if (e.contains("rationale")) rationale = e.at("rationale").get<std::string>();
                table->set(e.at("query").get<std::string>(), e.at("doc_id").get<std::string>(),
                           e.at("label").get<int>(), rationale);
            }
            for (const auto& e : fixtures.at("score").value("failures", nlohmann::json::array())) {
                table->fail(e.at("query").get<std::string>(), e.at("doc_id").get<std::string>(),
                            error_kind_from_string(e.value("kind", std::string{"endpoint"})),
                            e.value("message", std::string{"injected failure"}));
            }
        }
        models.score = std::move(table);
        break;
    }
    case BackendKind::mock_pattern: {
        auto pattern = std::make_unique<modelio::mock::PatternScoreMock>();
        if (fixtures.contains("score")) {
            for (const auto& e : fixtures.at("score").value("entries", nlohmann::json::array())) {
                pattern->override_label(e.at("query").get<std::string>(),
                                        e.at("doc_id").get<std::string>(),
                                        e.at("label").get<int>());
            }
            for (const auto& e : fixtures.at("score").value("failures", nlohmann::json::array())) {
                pattern->override_failure(
                    e.at("query").get<std::string>(), e.at("doc_id").get<std::string>(),
                    error_kind_from_string(e.value("kind", std::string{"endpoint"})),
                    e.value("message", std::string{"injected failure"}));
            }
        }
        models.score = std::move(pattern);
        break;
    }
    default:
        throw Error(ErrorKind::config,
                    "backend " + to_string(cfg.score.backend) + " cannot serve the score role");
    }

    switch (cfg.query.backend) {
    case BackendKind::http:
        models.query = std::make_unique<modelio::HttpModelClient>(cfg.query.endpoint,
                                                                  api_key_from_env(), templates);
        break;
    case BackendKind::mock_template: {
        std::string pattern = "mock-q({doc_id},{target_label})";
        if (fixtures.contains("query")) {
            pattern = fixtures.at("query").value("pattern", pattern);
        }
        models.query = std::make_unique<modelio::mock::TemplateQueryMock>(cfg.params.seed,
                                                                          pattern);
        break;
    }
    default:
        throw Error(ErrorKind::config,
                    "backend " + to_string(cfg.query.backend) + " cannot serve the query role");
    }

    switch (cfg.judge.backend) {
    case BackendKind::http:
        models.judge = std::make_unique<modelio::HttpModelClient>(cfg.judge.endpoint,
                                                                  api_key_from_env(), templates);
        break;
    case BackendKind::mock_relevance: {
        auto judge = std::make_unique<modelio::mock::RelevanceJudgeMock>(cfg.params.seed);
        if (fixtures.contains("judge")) {
            for (const auto& e : fixtures.at("judge").value("relevance", nlohmann::json::array())) {
                judge->set_relevance(e.at("doc_id").get<std::string>(),
                                     e.at("query").get<std::string>(),
                                     e.at("relevance").get<double>());
            }
            for (const auto& e : fixtures.at("judge").value("verdicts", nlohmann::json::array())) {
                const std::string token = e.at("verdict").get<std::string>();
                modelio::OrderVerdict verdict;
                if (token == "A") {
                    verdict = modelio::OrderVerdict::a_more_relevant;
                } else if (token == "B") {
                    verdict = modelio::OrderVerdict::b_more_relevant;
                } else if (token == "tie") {
                    verdict = modelio::OrderVerdict::tie;
                } else {
                    throw Error(ErrorKind::config, "judge verdict must be A, B or tie");
                }
                judge->set_verdict(e.at("doc_id").get<std::string>(),
                                   e.at("query_a").get<std::string>(),
                                   e.at("query_b").get<std::string>(), verdict);
            }
            for (const auto& e : fixtures.at("judge").value("fail_pairs", nlohmann::json::array())) {
                judge->fail_pair(e.at("doc_id").get<std::string>(),
                                 e.at("query_a").get<std::string>(),
                                 e.at("query_b").get<std::string>(),
                                 e.value("message", std::string{"injected judge failure"}));
            }
        }
        models.judge = std::move(judge);
        break;
    }
    default:
        throw Error(ErrorKind::config,
                    "backend " + to_string(cfg.judge.backend) + " cannot serve the judge role");
    }

    switch (cfg.rewrite.backend) {
    case BackendKind::http:
        models.rewrite = std::make_unique<modelio::HttpModelClient>(cfg.rewrite.endpoint,
                                                                    api_key_from_env(), templates);
        break;
    case BackendKind::mock_rewrite: {
        auto rewriter = std::make_unique<modelio::mock::RewriteMock>();
        if (fixtures.contains("rewrite")) {
            for (const auto& e : fixtures.at("rewrite").value("decline", nlohmann::json::array())) {
                rewriter->decline(e.value("ocr", std::string{}), e.value("asr", std::string{}));
            }
            for (const auto& e : fixtures.at("rewrite").value("failures", nlohmann::json::array())) {
                rewriter->fail(e.value("ocr", std::string{}), e.value("asr", std::string{}),
                               e.value("message", std::string{"injected rewrite failure"}));
            }
        }
        models.rewrite = std::move(rewriter);
        break;
    }
    default:
        throw Error(ErrorKind::config, "backend " + to_string(cfg.rewrite.backend) +
                                           " cannot serve the rewrite role");
    }

    return models;
}

// --- workdir lock ---------------------------------------------------------------

WorkdirLock::WorkdirLock(const fs::path& workdir) {
    fs::create_directories(workdir);
    lock_path_ = workdir / ".ssra_lock";
    const int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        throw Error(ErrorKind::stage,
                    "workdir is locked by another run (remove " + lock_path_.string() +
                        " if that run is gone)");
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
    held_ = true;
}

WorkdirLock::~WorkdirLock() {
    if (held_) {
        std::error_code ec;
        fs::remove(lock_path_, ec);
    }
}

// --- pipeline ---------------------------------------------------------------------

namespace {

// Endpoint knobs that cannot change stage outputs are excluded from the
// staleness comparison, so tuning concurrency or retries never forces reruns.
nlohmann::json semantic_config(const PipelineConfig& cfg) {
    nlohmann::json j = cfg.to_json();
    for (auto& [role, endpoint] : j.at("endpoints").items()) {
        (void)role;
        endpoint.erase("max_concurrency");
        endpoint.erase("retry");
        endpoint.erase("timeout_ms");
    }
    return j;
}

std::string manifest_path_string(const fs::path& file, const fs::path& workdir) {
    const fs::path norm = file.lexically_normal();
    const fs::path rel = norm.lexically_relative(workdir.lexically_normal());
    if (!rel.empty() && rel.native().rfind("..", 0) != 0) {
        return rel.generic_string();
    }
    return norm.generic_string();
}

std::vector<std::string> read_query_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open query file: " + path.string());
    }
    std::vector<std::string> queries;
    std::string line;
    const bool jsonl = path.extension() == ".jsonl";
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        if (jsonl) {
            try {
                const auto j = nlohmann::json::parse(line);
                queries.push_back(j.at("query").get<std::string>());
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) +
                                                  ": " + e.what());
            }
        } else {
            queries.push_back(line);
        }
    }
    if (queries.empty()) {
        throw Error(ErrorKind::precondition, "no queries in " + path.string());
    }
    return queries;
}

std::vector<std::pair<int, int>> read_consistency_pairs(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open consistency file: " + path.string());
    }
    std::vector<std::pair<int, int>> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) {
            continue;
        }
        try {
            if (t.front() == '{') {
                const auto j = nlohmann::json::parse(t);
                pairs.emplace_back(j.at("target_label").get<int>(),
                                   j.at("judged_label").get<int>());
            } else {
                const std::size_t tab = t.find('\t');
                if (tab == std::string::npos) {
                    throw Error(ErrorKind::parse, "expected target<TAB>judged");
                }
                pairs.emplace_back(std::stoi(t.substr(0, tab)), std::stoi(t.substr(tab + 1)));
            }
        } catch (const std::exception& e) {
            throw Error(ErrorKind::parse,
                        path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (pairs.empty()) {
        throw Error(ErrorKind::precondition, "no pairs in " + path.string());
    }
    return pairs;
}

} // namespace

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {
    if (config_.workdir.empty()) {
        throw Error(ErrorKind::config, "workdir is not set");
    }
    semantic_snapshot_ = semantic_config(config_);
}

const std::vector<std::string>& Pipeline::stage_names() {
    static const std::vector<std::string> names = {
        "ingest",          "rewrite",        "dedup",          "stage1",
        "synth",           "filter-score",   "filter-pairwise", "assemble",
        "subset-binary",   "subset-balanced", "stats",          "eval-retrieval",
        "eval-pairclass",  "diversity",      "consistency",    "loss-check",
    };
    return names;
}

bool Pipeline::stage_done(const std::string& stage) const {
    return fs::exists(config_.workdir / stage / "manifest.json");
}

fs::path Pipeline::consume(const std::string& stage, const std::string& filename) const {
    const fs::path manifest_path = config_.workdir / stage / "manifest.json";
    if (!fs::exists(manifest_path)) {
        throw Error(ErrorKind::stage,
                    "missing upstream manifest: run stage '" + stage + "' first");
    }
    const StageManifest manifest = StageManifest::load(manifest_path);
    const std::string rel = stage + "/" + filename;
    for (const FileDigest& d : manifest.outputs) {
        if (d.path == rel) {
            verify_digests({d}, config_.workdir, stage);
            return config_.workdir / stage / filename;
        }
    }
    throw Error(ErrorKind::stage, "stage '" + stage + "' did not produce " + filename);
}

fs::path Pipeline::docs_file() const {
    if (stage_done("rewrite")) {
        return consume("rewrite", "docs.jsonl");
    }
    return consume("ingest", "docs.jsonl");
}

Corpus Pipeline::load_stage_corpus(const fs::path& records, CorpusSchema schema,
                                   bool attach_docs) const {
    Corpus corpus = load_corpus(records, schema);
    if (attach_docs) {
        for (Document& doc : load_documents(docs_file())) {
            corpus.add_document(std::move(doc));
        }
    }
    return corpus;
}

std::vector<fs::path> Pipeline::stage_inputs(const std::string& name) const {
    const PipelineParams& p = config_.params;
    auto required = [&](const std::string& value, const char* what) {
        if (value.empty()) {
            throw Error(ErrorKind::config,
                        std::string("stage ") + name + " requires " + what);
        }
        return fs::path(value);
    };
    auto corpus_input = [&](const std::string& explicit_path) -> fs::path {
        if (!explicit_path.empty()) {
            return explicit_path;
        }
        if (stage_done("assemble")) {
            return consume("assemble", "output.jsonl");
        }
        if (stage_done("ingest")) {
            return consume("ingest", "labeled.jsonl");
        }
        throw Error(ErrorKind::stage,
                    "stage " + name + ": no input corpus (run ingest, or pass --in)");
    };

    if (name == "ingest") {
        std::vector<fs::path> inputs;
        for (const fs::path& path : {config_.labeled, config_.unlabeled, config_.docs}) {
            if (!path.empty()) {
                inputs.push_back(path);
            }
        }
        if (inputs.empty()) {
            throw Error(ErrorKind::config, "ingest: no input paths configured");
        }
        return inputs;
    }
    if (name == "rewrite") return {consume("ingest", "docs.jsonl")};
    if (name == "dedup") return {consume("ingest", "labeled.jsonl")};
    if (name == "stage1") {
        return {consume("dedup", "output.jsonl"), consume("ingest", "unlabeled.jsonl"),
                docs_file()};
    }
    if (name == "synth") return {docs_file()};
    if (name == "filter-score") return {consume("synth", "output.jsonl"), docs_file()};
    if (name == "filter-pairwise") {
        return {consume("filter-score", "output.jsonl"), docs_file()};
    }
    if (name == "assemble") {
        return {consume("filter-pairwise", "output.jsonl"), consume("stage1", "output.jsonl")};
    }
    if (name == "subset-binary" || name == "subset-balanced") {
        return {corpus_input(p.subset_input)};
    }
    if (name == "stats") {
        std::vector<fs::path> inputs = {corpus_input(p.stats_input)};
        if (stage_done("rewrite") || stage_done("ingest")) {
            inputs.push_back(docs_file());
        }
        return inputs;
    }
    if (name == "eval-retrieval" || name == "eval-pairclass") {
        return {required(p.qrels, "params.qrels"), required(p.run, "params.run")};
    }
    if (name == "diversity") {
        std::vector<fs::path> inputs;
        if (!p.diversity_input.empty()) {
            inputs.push_back(p.diversity_input);
        } else {
            inputs.push_back(consume("synth", "output.jsonl"));
        }
        if (!p.diversity_baseline.empty()) {
            inputs.emplace_back(p.diversity_baseline);
        }
        return inputs;
    }
    if (name == "consistency") {
        std::vector<fs::path> inputs = {
            required(p.consistency_current, "params.consistency_current")};
        if (!p.consistency_baseline.empty()) {
            inputs.emplace_back(p.consistency_baseline);
        }
        return inputs;
    }
    if (name == "loss-check") return {required(p.loss_batch, "params.loss_batch")};
    throw Error(ErrorKind::config, "unknown stage: " + name);
}

bool Pipeline::run(const std::string& name) {
    const std::vector<fs::path> inputs = stage_inputs(name);
    const auto body = [&](const fs::path& dir) -> StageOutcome {
        if (name == "ingest") return do_ingest(dir);
        if (name == "rewrite") return do_rewrite(dir);
        if (name == "dedup") return do_dedup(dir);
        if (name == "stage1") return do_stage1(dir);
        if (name == "synth") return do_synth(dir);
        if (name == "filter-score") return do_filter_score(dir);
        if (name == "filter-pairwise") return do_filter_pairwise(dir);
        if (name == "assemble") return do_assemble(dir);
        if (name == "subset-binary") return do_subset_binary(dir);
        if (name == "subset-balanced") return do_subset_balanced(dir);
        if (name == "stats") return do_stats(dir);
        if (name == "eval-retrieval") return do_eval_retrieval(dir);
        if (name == "eval-pairclass") return do_eval_pairclass(dir);
        if (name == "diversity") return do_diversity(dir);
        if (name == "consistency") return do_consistency(dir);
        if (name == "loss-check") return do_loss_check(dir);
        throw Error(ErrorKind::config, "unknown stage: " + name);
    };
    return run_stage(name, inputs, body);
}

bool Pipeline::run_stage(
    const std::string& name, const std::vector<fs::path>& inputs,
    const std::function<StageOutcome(const fs::path& stage_dir)>& body) {
    const fs::path dir = config_.workdir / name;
    const fs::path manifest_path = dir / "manifest.json";

    std::vector<FileDigest> input_digests;
    for (const fs::path& input : inputs) {
        if (!fs::exists(input)) {
            throw Error(ErrorKind::io, "stage " + name + ": input missing: " + input.string());
        }
        input_digests.push_back(
            {manifest_path_string(input, config_.workdir), sha256_file(input)});
    }

    if (fs::exists(manifest_path)) {
        const StageManifest previous = StageManifest::load(manifest_path);
        const bool same_inputs = [&] {
            if (previous.inputs.size() != input_digests.size()) return false;
            for (std::size_t i = 0; i < input_digests.size(); ++i) {
                if (previous.inputs[i].path != input_digests[i].path ||
                    previous.inputs[i].sha256 != input_digests[i].sha256) {
                    return false;
                }
            }
            return true;
        }();
        if (same_inputs && previous.config_snapshot == semantic_snapshot_) {
            // Digest check on recorded outputs: a tampered or deleted output
            // is an abort, an intact one makes the rerun a no-op.
            verify_digests(previous.outputs, config_.workdir, name);
            return false;
        }
    }

    fs::create_directories(dir);
    StageManifest manifest;
    manifest.stage = name;
    manifest.inputs = std::move(input_digests);
    manifest.config_snapshot = semantic_snapshot_;
    manifest.started_at = utc_timestamp();

    const StageOutcome outcome = body(dir);

    manifest.finished_at = utc_timestamp();
    manifest.counts = outcome.counts;
    for (const std::string& filename : outcome.outputs) {
        const fs::path file = dir / filename;
        manifest.outputs.push_back(
            {manifest_path_string(file, config_.workdir), sha256_file(file)});
    }
    manifest.save(manifest_path);
    return true;
}

// --- stage bodies -----------------------------------------------------------------

Pipeline::StageOutcome Pipeline::do_ingest(const fs::path& dir) {
    StageOutcome outcome;
    nlohmann::json report;
    if (!config_.labeled.empty()) {
        const Corpus labeled = load_corpus(config_.labeled, CorpusSchema::labeled);
        save_corpus(labeled, dir / "labeled.jsonl");
        outcome.outputs.push_back("labeled.jsonl");
        outcome.counts.in += static_cast<long long>(labeled.size());
        outcome.counts.out += static_cast<long long>(labeled.size());
        report["n_labeled"] = labeled.size();
    }
    if (!config_.unlabeled.empty()) {
        const Corpus unlabeled = load_corpus(config_.unlabeled, CorpusSchema::unlabeled);
        save_corpus(unlabeled, dir / "unlabeled.jsonl");
        outcome.outputs.push_back("unlabeled.jsonl");
        outcome.counts.in += static_cast<long long>(unlabeled.size());
        outcome.counts.out += static_cast<long long>(unlabeled.size());
        report["n_unlabeled"] = unlabeled.size();
    }
    if (!config_.docs.empty()) {
        const std::vector<Document> docs = load_documents(config_.docs);
        save_documents(docs, dir / "docs.jsonl");
        outcome.outputs.push_back("docs.jsonl");
        outcome.counts.in += static_cast<long long>(docs.size());
        outcome.counts.out += static_cast<long long>(docs.size());
        report["n_docs"] = docs.size();
    }
    write_file(dir / "report.json", report.dump(2) + "\n");
    outcome.outputs.push_back("report.json");
    outcome.report = report;
    return outcome;
}

Pipeline::StageOutcome Pipeline::do_rewrite(const fs::path& dir) {
    const std::vector<Document> docs = load_documents(consume("ingest", "docs.jsonl"));
    ModelSet models = build_models(config_);

    struct Request {
        const Document* doc;
        bool needs_rewrite;
    };
    std::vector<Request> requests;
    requests.reserve(docs.size());
    for (const Document& doc : docs) {
        requests.push_back({&doc, doc.body.empty()});
    }

    const auto outcomes = modelio::run_batch(
        requests,
        [&](const Request& req) -> std::optional<std::string> {
            if (!req.needs_rewrite) {
                return req.doc->body;
            }
            return models.rewrite->rewrite_item(req.doc->ocr.value_or(""),
                                                req.doc->asr.value_or(""));
        },
        config_.rewrite.endpoint.max_concurrency);

    std::vector<Document> rewritten;
    std::vector<std::string> failures;
    std::size_t n_fallback = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (!outcomes[i].ok()) {
            failures.push_back("doc " + docs[i].doc_id + ": " + outcomes[i].failure->message);
            continue;
        }
        try {
            rewritten.push_back(assemble_document(docs[i].doc_id, docs[i].title, docs[i].ocr,
                                                  docs[i].asr, *outcomes[i].value));
            if (!*outcomes[i].value || (*outcomes[i].value)->empty()) {
                ++n_fallback;
            }
        } catch (const Error& e) {
            failures.push_back("doc " + docs[i].doc_id + ": " + e.what());
        }
    }

    save_documents(rewritten, dir / "docs.jsonl");
    nlohmann::json report;
    report["n_in"] = docs.size();
    report["n_out"] = rewritten.size();
    report["n_fallback"] = n_fallback;
    report["failures"] = failures;
    write_file(dir / "report.json", report.dump(2) + "\n");

    StageOutcome outcome;
    outcome.outputs = {"docs.jsonl", "report.json"};
    outcome.counts = {static_cast<long long>(docs.size()),
                      static_cast<long long>(rewritten.size()),
                      static_cast<long long>(docs.size() - rewritten.size())};
    outcome.report = report;
    return outcome;
}

Pipeline::StageOutcome Pipeline::do_dedup(const fs::path& dir) {
    const Corpus labeled = load_corpus(consume("ingest", "labeled.jsonl"), CorpusSchema::labeled);
    const Corpus deduped = dedup_for_query_model(labeled);
    save_corpus(deduped, dir / "output.jsonl");

    StageOutcome outcome;
    outcome.outputs = {"output.jsonl"};
    outcome.counts = {static_cast<long long>(labeled.size()),
                      static_cast<long long>(deduped.size()),
                      static_cast<long long>(labeled.size() - deduped.size())};
    return outcome;
}

Pipeline::StageOutcome Pipeline::do_stage1(const fs::path& dir) {
    const Corpus deduped =
        load_corpus(consume("dedup", "output.jsonl"), CorpusSchema::labeled);
    const Corpus unlabeled =
        load_stage_corpus(consume("ingest", "unlabeled.jsonl"), CorpusSchema::unlabeled, true);

    ModelSet models = build_models(config_);
    stage1::Stage1Options options;
    options.max_concurrency = config_.score.endpoint.max_concurrency;
    options.include_label0 = config_.params.include_label0;

    const stage1::Stage1Output output =
        stage1::run_stage1(unlabeled, deduped, *models.score, options);

    save_corpus(output.merged, dir / "output.jsonl");
    stage1::save_d2q(output.d2q, dir / "d2q.jsonl");
    write_file(dir / "report.json", output.report.to_json().dump(2) + "\n");

    StageOutcome outcome;
    outcome.outputs = {"output.jsonl", "d2q.jsonl", "report.json"};
    outcome.counts = {static_cast<long long>(unlabeled.size() + deduped.size()),
                      static_cast<long long>(output.merged.size()),
                      static_cast<long long>(output.report.n_parse_failures +
                                             output.report.n_label0_excluded)};
    outcome.report = output.report.to_json();
    return outcome;
}

Pipeline::StageOutcome Pipeline::do_synth(const fs::path& dir) {
    Corpus docs;
    for (Document& doc : load_documents(docs_file())) {
        docs.add_document(std::move(doc));
    }

    stage2::SynthesisPlan plan;
    plan.per_doc_per_label = config_.params.per_doc_per_label;
    for (int label : config_.params.target_labels) {
        plan.target_labels.push_back(RelevanceLabel(label));
    }
    std::vector<std::string> doc_ids;
    doc_ids.reserve(docs.documents.size());
    for (const Document& doc : docs.documents) {
        doc_ids.push_back(doc.doc_id);
    }
    if (config_.params.synth_docs > 0 && config_.params.synth_docs < doc_ids.size()) {
        // Deterministic sample in document-file order.
        SplitMix64 rng(config_.params.seed ^ fnv1a64("synth"));
        std::vector<std::size_t> indices(doc_ids.size());
        for (std::size_t i = 0; i < indices.size(); ++i) {
            indices[i] = i;
        }
        for (std::size_t i = 0; i < config_.params.synth_docs; ++i) {
            std::swap(indices[i], indices[i + rng.below(indices.size() - i)]);
        }
        indices.resize(config_.params.synth_docs);
        std::sort(indices.begin(), indices.end());
        plan.doc_ids.reserve(indices.size());
        for (std::size_t idx : indices) {
            plan.doc_ids.push_back(doc_ids[idx]);
        }
    } else {
        plan.doc_ids = std::move(doc_ids);
    }

    ModelSet models = build_models(config_);
    const stage2::SynthesisResult result =
        stage2::synthesize(plan, docs, *models.query, config_.query.endpoint.max_concurrency);

    save_corpus(result.synthetic, dir / "output.jsonl");
    nlohmann::json report;
    report["n_slots"] = plan.doc_ids.size() * plan.target_labels.size() *
                        static_cast<std::size_t>(plan.per_doc_per_label);
    report["n_generated"] = result.synthetic.size();
    report["failures"] = result.failures;
    write_file(dir / "report.json", report.dump(2) + "\n");

    StageOutcome outcome;
    outcome.outputs = {"output.jsonl", "report.json"};
    outcome.counts = {report["n_slots"].get<long long>(),
                      static_cast<long long>(result.synthetic.size()),
                      static_cast<long long>(result.failures.size())};
    outcome.report = report;
    return outcome;
}

Pipeline::StageOutcome Pipeline::do_filter_score(const fs::path& dir) {
    const Corpus synthetic =
        load_stage_corpus(consume("synth", "output.jsonl"), CorpusSchema::labeled, true);
    ModelSet models = build_models(config_);
    const stage2::ScoreFilterResult result = stage2::filter_by_score(
        synthetic, *models.score, config_.score.endpoint.max_concurrency);

    save_corpus(result.kept, dir / "output.jsonl");
    stage2::save_decisions(result.decisions, dir / "decisions.jsonl");
    nlohmann::json report;
    report["n_in"] = synthetic.size();
    report["n_kept"] = result.kept.size();
    report["n_dropped"] = synthetic.size() - result.kept.size();
    write_file(dir / "report.json", report.dump(2) + "\n");

    StageOutcome outcome;
    outcome.outputs = {"output.jsonl", "decisions.jsonl", "report.json"};
    outcome.counts = {static_cast<long long>(synthetic.size()),
                      static_cast<long long>(result.kept.size()),
                      static_cast<long long>(synthetic.size() - result.kept.size())};
    outcome.report = report;
    return outcome;
}

Pipeline::StageOutcome Pipeline::do_filter_pairwise(const fs::path& dir) {
    const Corpus kept =
        load_stage_corpus(consume("filter-score", "output.jsonl"), CorpusSchema::labeled, true);
    ModelSet models = build_models(config_);
    const stage2::PairwiseFilterResult result = stage2::filter_pairwise(
        kept, *models.judge, config_.judge.endpoint.max_concurrency);

    save_corpus(result.refined, dir / "output.jsonl");
    stage2::save_decisions(result.decisions, dir / "decisions.jsonl");
    stage2::save_judgments(result.judgments, dir / "judgments.jsonl");

    std::size_t n_inconsistent_pairs = 0;
    for (const stage2::PairJudgment& j : result.judgments) {
        if (j.inconsistent) {
            ++n_inconsistent_pairs;
        }
    }
    nlohmann::json report;
    report["n_in"] = kept.size();
    report["n_kept"] = result.refined.size();
    report["n_pairs_judged"] = result.judgments.size();
    report["n_pairs_inconsistent"] = n_inconsistent_pairs;
    write_file(dir / "report.json", report.dump(2) + "\n");

    StageOutcome outcome;
    outcome.outputs = {"output.jsonl", "decisions.jsonl", "judgments.jsonl", "report.json"};
    outcome.counts = {static_cast<long long>(kept.size()),
                      static_cast<long long>(result.refined.size()),
                      static_cast<long long>(kept.size() - result.refined.size())};
    outcome.report = report;
    return outcome;
}

Pipeline::StageOutcome Pipeline::do_assemble(const fs::path& dir) {
    const Corpus refined =
        load_corpus(consume("filter-pairwise", "output.jsonl"), CorpusSchema::labeled);
    const Corpus stage1_corpus =
        load_corpus(consume("stage1", "output.jsonl"), CorpusSchema::labeled);
    const Corpus enriched = stage2::assemble_enriched(refined, stage1_corpus);
    save_corpus(enriched, dir / "output.jsonl");

    StageOutcome outcome;
    outcome.outputs = {"output.jsonl"};
    outcome.counts = {static_cast<long long>(refined.size() + stage1_corpus.size()),
                      static_cast<long long>(enriched.size()),
                      static_cast<long long>(refined.size() + stage1_corpus.size() -
                                             enriched.size())};
    return outcome;
}

Pipeline::StageOutcome Pipeline::do_subset_binary(const fs::path& dir) {
    const fs::path input = stage_inputs("subset-binary").front();
    const Corpus corpus = load_corpus(input, CorpusSchema::labeled);
    const Corpus subset = make_binary_subset(corpus);
    save_corpus(subset, dir / "output.jsonl");

    StageOutcome outcome;
    outcome.outputs = {"output.jsonl"};
    outcome.counts = {static_cast<long long>(corpus.size()),
                      static_cast<long long>(subset.size()),
                      static_cast<long long>(corpus.size() - subset.size())};
    return outcome;
}

Pipeline::StageOutcome Pipeline::do_subset_balanced(const fs::path& dir) {
    const fs::path input = stage_inputs("subset-balanced").front();
    const Corpus corpus = load_corpus(input, CorpusSchema::labeled);
    const Corpus subset =
        make_balanced_testset(corpus, config_.params.n_per_label, config_.params.seed);
    save_corpus(subset, dir / "output.jsonl");

    StageOutcome outcome;
    outcome.outputs = {"output.jsonl"};
    outcome.counts = {static_cast<long long>(corpus.size()),
                      static_cast<long long>(subset.size()),
                      static_cast<long long>(corpus.size() - subset.size())};
    return outcome;
}

Pipeline::StageOutcome Pipeline::do_stats(const fs::path& dir) {
    const std::vector<fs::path> inputs = stage_inputs("stats");
    Corpus corpus = load_corpus(inputs.front(), CorpusSchema::labeled);
    if (inputs.size() > 1) {
        for (Document& doc : load_documents(inputs[1])) {
            corpus.add_document(std::move(doc));
        }
    }
    const CorpusStats stats = compute_stats(corpus, config_.params.length_metric);
    nlohmann::json report = stats.to_json();
    report["input"] = inputs.front().string();
    write_file(dir / "report.json", report.dump(2) + "\n");

    StageOutcome outcome;
    outcome.outputs = {"report.json"};
    outcome.counts = {static_cast<long long>(corpus.size()),
                      static_cast<long long>(corpus.size()), 0};
    outcome.report = report;
    return outcome;
}

Pipeline::StageOutcome Pipeline::do_eval_retrieval(const fs::path& dir) {
    const metrics::Qrels qrels = metrics::load_qrels(config_.params.qrels);
    const metrics::RunRanking run = metrics::load_run(config_.params.run);
    metrics::NdcgOptions options;
    options.gain = config_.params.gain;
    options.strict_unjudged = config_.params.strict_unjudged;
    options.exclude_all_zero = config_.params.exclude_all_zero;
    const metrics::NdcgResult result =
        metrics::ndcg_at_k(qrels, run, config_.params.ndcg_k, options);

    nlohmann::json report = result.to_json(config_.params.ndcg_k);
    report["gain"] =
        config_.params.gain == metrics::GainFunction::linear ? "linear" : "exponential";
    write_file(dir / "report.json", report.dump(2) + "\n");

    StageOutcome outcome;
    outcome.outputs = {"report.json"};
    outcome.counts = {static_cast<long long>(run.rankings.size()),
                      static_cast<long long>(result.n_evaluated), 0};
    outcome.report = report;
    return outcome;
}

Pipeline::StageOutcome Pipeline::do_eval_pairclass(const fs::path& dir) {
    const metrics::Qrels qrels = metrics::load_qrels(config_.params.qrels);
    const metrics::RunRanking run = metrics::load_run(config_.params.run);
    const auto pairs =
        metrics::join_scored_pairs(qrels, run, config_.params.strict_unjudged);

    nlohmann::json report;
    report["schema_version"] = 1;
    report["metric"] = "average_precision";
    report["n_pairs"] = pairs.size();
    nlohmann::json per = nlohmann::json::object();
    double sum = 0.0;
    for (int threshold : config_.params.ap_thresholds) {
        const metrics::ApResult result =
            metrics::average_precision_at_threshold(pairs, threshold);
        per[std::to_string(threshold)] = result.to_json(threshold);
        sum += result.ap;
    }
    report["per_threshold"] = per;
    report["mean_ap"] = sum / static_cast<double>(config_.params.ap_thresholds.size());
    write_file(dir / "report.json", report.dump(2) + "\n");

    StageOutcome outcome;
    outcome.outputs = {"report.json"};
    outcome.counts = {static_cast<long long>(pairs.size()),
                      static_cast<long long>(pairs.size()), 0};
    outcome.report = report;
    return outcome;
}

Pipeline::StageOutcome Pipeline::do_diversity(const fs::path& dir) {
    const std::vector<fs::path> inputs = stage_inputs("diversity");
    const std::vector<std::string> queries = read_query_lines(inputs.front());
    const metrics::DiversityReport report = metrics::duplicate_rate(queries);

    nlohmann::json j = report.to_json();
    j["input"] = inputs.front().string();
    if (inputs.size() > 1) {
        const metrics::DiversityReport baseline =
            metrics::duplicate_rate(read_query_lines(inputs[1]));
        j["baseline"] = baseline.to_json();
        j["baseline"]["input"] = inputs[1].string();
        j["relative_decrease_pct"] = metrics::relative_decrease_percent(baseline, report);
    }
    write_file(dir / "report.json", j.dump(2) + "\n");

    StageOutcome outcome;
    outcome.outputs = {"report.json"};
    outcome.counts = {static_cast<long long>(report.total),
                      static_cast<long long>(report.unique),
                      static_cast<long long>(report.total - report.unique)};
    outcome.report = j;
    return outcome;
}

Pipeline::StageOutcome Pipeline::do_consistency(const fs::path& dir) {
    const std::vector<fs::path> inputs = stage_inputs("consistency");
    const metrics::ConsistencyReport current =
        metrics::consistency_rate(read_consistency_pairs(inputs.front()));

    nlohmann::json report;
    report["current"] = current.to_json();
    if (inputs.size() > 1) {
        const metrics::ConsistencyReport baseline =
            metrics::consistency_rate(read_consistency_pairs(inputs[1]));
        report["baseline"] = baseline.to_json();
        report["relative_improvement_pct"] =
            metrics::relative_improvement_percent(baseline, current);
    }
    write_file(dir / "report.json", report.dump(2) + "\n");

    StageOutcome outcome;
    outcome.outputs = {"report.json"};
    outcome.counts = {static_cast<long long>(current.overall.total),
                      static_cast<long long>(current.overall.matched), 0};
    outcome.report = report;
    return outcome;
}

Pipeline::StageOutcome Pipeline::do_loss_check(const fs::path& dir) {
    nlohmann::json batch_json;
    try {
        batch_json = nlohmann::json::parse(read_file(config_.params.loss_batch));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, "bad loss batch: " + std::string(e.what()));
    }
    loss::EmbeddingBatch batch = loss::EmbeddingBatch::from_json(batch_json);
    if (!batch_json.contains("temperature")) {
        batch.temperature = config_.params.tau;
    }
    const std::string weight_name = config_.params.weight_fn;
    const loss::LossResult result = loss::weighted_infonce(
        batch, [&](int label) { return weight_fn_value(weight_name, label); });

    auto norms = [](const loss::Mat& m) {
        std::vector<double> out;
        out.reserve(m.size());
        for (const loss::Vec& row : m) {
            double s = 0.0;
            for (double v : row) {
                s += v * v;
            }
            out.push_back(std::sqrt(s));
        }
        return out;
    };
    nlohmann::json report;
    report["schema_version"] = 1;
    report["loss"] = result.loss;
    report["n"] = batch.queries.size();
    report["dim"] = batch.queries.front().size();
    report["temperature"] = batch.temperature;
    report["weight_fn"] = weight_name;
    report["grad_query_norms"] = norms(result.grad_queries);
    report["grad_document_norms"] = norms(result.grad_documents);
    write_file(dir / "report.json", report.dump(2) + "\n");

    StageOutcome outcome;
    outcome.outputs = {"report.json"};
    outcome.counts = {static_cast<long long>(batch.queries.size()),
                      static_cast<long long>(batch.queries.size()), 0};
    outcome.report = report;
    return outcome;
}

// --- consolidated report -------------------------------------------------------

nlohmann::json Pipeline::consolidated_report() const {
    if (!fs::exists(config_.workdir)) {
        throw Error(ErrorKind::stage, "no manifests in " + config_.workdir.string());
    }
    std::vector<std::string> stages;
    for (const auto& entry : fs::directory_iterator(config_.workdir)) {
        if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) {
            stages.push_back(entry.path().filename().string());
        }
    }
    if (stages.empty()) {
        throw Error(ErrorKind::stage, "no manifests in " + config_.workdir.string());
    }
    std::sort(stages.begin(), stages.end());

    nlohmann::json report;
    report["schema_version"] = 1;
    report["workdir"] = config_.workdir.string();
    nlohmann::json stage_entries = nlohmann::json::array();
    StageCounts totals;
    for (const std::string& stage : stages) {
        const StageManifest manifest = StageManifest::load(config_.workdir / stage / "manifest.json");
        nlohmann::json entry;
        entry["stage"] = manifest.stage;
        entry["started_at"] = manifest.started_at;
        entry["finished_at"] = manifest.finished_at;
        entry["counts"] = {{"in", manifest.counts.in},
                           {"out", manifest.counts.out},
                           {"dropped", manifest.counts.dropped}};
        const fs::path stage_report = config_.workdir / stage / "report.json";
        if (fs::exists(stage_report)) {
            try {
                entry["report"] = nlohmann::json::parse(read_file(stage_report));
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorKind::parse,
                            "corrupt report for stage " + stage + ": " + e.what());
            }
        }
        totals.in += manifest.counts.in;
        totals.out += manifest.counts.out;
        totals.dropped += manifest.counts.dropped;
        stage_entries.push_back(std::move(entry));
    }
    report["stages"] = stage_entries;
    report["totals"] = {{"in", totals.in}, {"out", totals.out}, {"dropped", totals.dropped}};
    return report;
}

std::string Pipeline::report_table(const nlohmann::json& report) {
    std::ostringstream out;
    out << "stage                 in        out    dropped\n";
    out << "---------------------------------------------\n";
    for (const auto& entry : report.at("stages")) {
        char line[128];
        std::snprintf(line, sizeof(line), "%-18s %8lld %10lld %9lld\n",
                      entry.at("stage").get<std::string>().c_str(),
                      entry.at("counts").at("in").get<long long>(),
                      entry.at("counts").at("out").get<long long>(),
                      entry.at("counts").at("dropped").get<long long>());
        out << line;
    }
    out << "---------------------------------------------\n";
    char line[128];
    std::snprintf(line, sizeof(line), "%-18s %8lld %10lld %9lld\n", "total",
                  report.at("totals").at("in").get<long long>(),
                  report.at("totals").at("out").get<long long>(),
                  report.at("totals").at("dropped").get<long long>());
    out << line;
    return out.str();
}

} // namespace ssra::pipeline
