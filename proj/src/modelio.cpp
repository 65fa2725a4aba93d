// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#include "ssra/modelio.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "ssra/batch.hpp"
#include "ssra/error.hpp"
#include "ssra/util.hpp"

namespace ssra::modelio {

std::string to_string(OutputGrammar g) {
    switch (g) {
    case OutputGrammar::score_line: return "score_line";
    case OutputGrammar::plain_query: return "plain_query";
    case OutputGrammar::order_token: return "order_token";
    case OutputGrammar::rewrite_text: return "rewrite_text";
    case OutputGrammar::reasoning_then_score: return "reasoning_then_score";
    }
    throw Error(ErrorKind::parse, "invalid grammar value");
}

OutputGrammar grammar_from_string(const std::string& s) {
    if (s == "score_line") return OutputGrammar::score_line;
    if (s == "plain_query") return OutputGrammar::plain_query;
    if (s == "order_token") return OutputGrammar::order_token;
    if (s == "rewrite_text") return OutputGrammar::rewrite_text;
    if (s == "reasoning_then_score") return OutputGrammar::reasoning_then_score;
    throw Error(ErrorKind::parse, "unknown output grammar: " + s);
}

std::string to_string(OrderVerdict v) {
    switch (v) {
    case OrderVerdict::a_more_relevant: return "A";
    case OrderVerdict::b_more_relevant: return "B";
    case OrderVerdict::tie: return "tie";
    }
    throw Error(ErrorKind::parse, "invalid verdict value");
}

std::string to_string(ModelErrorKind k) {
    switch (k) {
    case ModelErrorKind::endpoint: return "endpoint";
    case ModelErrorKind::score_parse: return "score_parse";
    case ModelErrorKind::judge_parse: return "judge_parse";
    case ModelErrorKind::generation: return "generation";
    }
    throw Error(ErrorKind::parse, "invalid error kind");
}

// --- prompt templates --------------------------------------------------------

namespace {

bool is_slot_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Walks `body`, calling on_slot(name) for each {name} and on_text(chunk)
// for literal runs. A '{' not opening a well-formed slot is literal text.
template <class OnText, class OnSlot>
void scan_template(const std::string& body, OnText&& on_text, OnSlot&& on_slot) {
    std::size_t pos = 0;
    while (pos < body.size()) {
        const std::size_t open = body.find('{', pos);
        if (open == std::string::npos) {
            on_text(body.substr(pos));
            return;
        }
        std::size_t end = open + 1;
        while (end < body.size() && is_slot_char(body[end])) {
            ++end;
        }
        if (end > open + 1 && end < body.size() && body[end] == '}') {
            on_text(body.substr(pos, open - pos));
            on_slot(body.substr(open + 1, end - open - 1));
            pos = end + 1;
        } else {
            on_text(body.substr(pos, open - pos + 1));
            pos = open + 1;
        }
    }
}

} // namespace

std::string PromptTemplate::render(const std::map<std::string, std::string>& slots) const {
    std::string out;
    out.reserve(body.size());
    scan_template(
        body, [&](const std::string& chunk) { out += chunk; },
        [&](const std::string& name) {
            auto it = slots.find(name);
            if (it == slots.end()) {
                throw Error(ErrorKind::precondition,
                            "template " + template_id + ": missing slot value {" + name + "}");
            }
            out += it->second;
        });
    return out;
}

std::vector<std::string> PromptTemplate::referenced_slots() const {
    std::vector<std::string> names;
    scan_template(
        body, [](const std::string&) {},
        [&](const std::string& name) {
            if (std::find(names.begin(), names.end(), name) == names.end()) {
                names.push_back(name);
            }
        });
    return names;
}

PromptTemplate PromptTemplate::load_file(const std::filesystem::path& path,
                                         std::string template_id, OutputGrammar grammar) {
    PromptTemplate t;
    t.template_id = std::move(template_id);
    t.body = read_file(path);
    t.output_grammar = grammar;
    return t;
}

// --- reply grammars ----------------------------------------------------------

namespace {

// Splits off the final non-empty line; returns (preceding text, that line).
std::pair<std::string, std::string> split_final_line(const std::string& reply) {
    std::vector<std::string> lines;
    std::istringstream in(reply);
    std::string line;
    while (std::getline(in, line)) {
        lines.push_back(line);
    }
    for (std::size_t i = lines.size(); i > 0; --i) {
        const std::string last = trim(lines[i - 1]);
        if (!last.empty()) {
            std::string head;
            for (std::size_t j = 0; j + 1 < i; ++j) {
                head += lines[j];
                head += '\n';
            }
            return {trim(head), last};
        }
    }
    return {"", ""};
}

} // namespace

ScoreJudgment parse_score_reply(const std::string& reply) {
    const auto [head, last] = split_final_line(reply);
    const std::string prefix = "label:";
    if (last.size() <= prefix.size() || last.compare(0, prefix.size(), prefix) != 0) {
        throw ModelError(ModelErrorKind::score_parse,
                         "reply does not end with a \"label: <digit>\" line", reply);
    }
    const std::string digits = trim(last.substr(prefix.size()));
    if (digits.size() != 1 || !std::isdigit(static_cast<unsigned char>(digits[0]))) {
        throw ModelError(ModelErrorKind::score_parse,
                         "malformed label line: " + last, reply);
    }
    const int value = digits[0] - '0';
    if (value < RelevanceLabel::kMin || value > RelevanceLabel::kMax) {
        throw ModelError(ModelErrorKind::score_parse, "label out of range: " + last, reply);
    }
    ScoreJudgment judgment{RelevanceLabel(value), std::nullopt};
    if (!head.empty()) {
        judgment.rationale = head;
    }
    return judgment;
}

OrderJudgment parse_order_reply(const std::string& reply) {
    const auto [head, last] = split_final_line(reply);
    (void)head;
    if (last == "order: A") return OrderJudgment{OrderVerdict::a_more_relevant};
    if (last == "order: B") return OrderJudgment{OrderVerdict::b_more_relevant};
    if (last == "order: tie") return OrderJudgment{OrderVerdict::tie};
    throw ModelError(ModelErrorKind::judge_parse,
                     "reply does not end with an \"order: A|B|tie\" line", reply);
}

// --- endpoint config -----------------------------------------------------------

void EndpointConfig::validate() const {
    if (max_concurrency < 1) {
        throw Error(ErrorKind::config, "max_concurrency must be >= 1");
    }
    if (retry.max_attempts < 1) {
        throw Error(ErrorKind::config, "retry.max_attempts must be >= 1");
    }
    if (temperature < 0.0) {
        throw Error(ErrorKind::config, "temperature must be >= 0");
    }
}

EndpointConfig EndpointConfig::from_json(const nlohmann::json& j) {
    EndpointConfig cfg;
    cfg.base_url = j.value("base_url", std::string{});
    cfg.model_name = j.value("model_name", std::string{});
    cfg.temperature = j.value("temperature", cfg.temperature);
    cfg.max_concurrency = j.value("max_concurrency", cfg.max_concurrency);
    if (j.contains("retry")) {
        cfg.retry.max_attempts = j.at("retry").value("max_attempts", cfg.retry.max_attempts);
        cfg.retry.backoff = std::chrono::milliseconds(
            j.at("retry").value("backoff_ms", static_cast<long long>(cfg.retry.backoff.count())));
    }
    cfg.timeout = std::chrono::milliseconds(
        j.value("timeout_ms", static_cast<long long>(cfg.timeout.count())));
    cfg.validate();
    return cfg;
}

nlohmann::json EndpointConfig::to_json() const {
    return {
        {"base_url", base_url},
        {"model_name", model_name},
        {"temperature", temperature},
        {"max_concurrency", max_concurrency},
        {"retry", {{"max_attempts", retry.max_attempts}, {"backoff_ms", retry.backoff.count()}}},
        {"timeout_ms", timeout.count()},
    };
}

// --- reasoning-chain collection -------------------------------------------------

ReasoningChains collect_reasoning_chains(const std::vector<LabeledPair>& records,
                                         ReasoningClient& client, int max_concurrency) {
    const auto outcomes = run_batch(
        records,
        [&](const LabeledPair& rec) {
            return client.rationale(rec.query, rec.document, rec.label);
        },
        max_concurrency);

    ReasoningChains chains;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (outcomes[i].ok()) {
            chains.chains.push_back({records[i], *outcomes[i].value});
        } else {
            chains.failures.push_back({records[i], outcomes[i].failure->message});
        }
    }
    return chains;
}

void save_reasoning_chains(const ReasoningChains& chains, const std::filesystem::path& path) {
    std::ostringstream out;
    for (const auto& entry : chains.chains) {
        nlohmann::ordered_json j;
        j["query_id"] = entry.pair.query.query_id;
        j["query"] = entry.pair.query.text;
        j["doc_id"] = entry.pair.document.doc_id;
        j["label"] = entry.pair.label.value();
        j["rationale"] = entry.rationale;
        out << j.dump() << '\n';
    }
    write_file(path, out.str());
}

std::size_t count_reasoning_chain_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open reasoning file: " + path.string());
    }
    std::size_t count = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!trim(line).empty()) {
            ++count;
        }
    }
    return count;
}

} // namespace ssra::modelio
