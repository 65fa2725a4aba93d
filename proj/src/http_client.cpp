// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#include "ssra/http_client.hpp"

#include <httplib.h>

#include "ssra/batch.hpp"
#include "ssra/text.hpp"
#include "ssra/util.hpp"

namespace ssra::modelio {

namespace {

constexpr const char* kScoreTemplate =
    "You are a relevance rater for short-video search.\n"
    "Rate how well the document satisfies the query on a 0-3 scale:\n"
    "3: complete match for the query intent\n"
    "2: relevant, with gaps only in non-essential details\n"
    "1: partially relevant; key entities match but major aspects are missing\n"
    "0: not relevant\n"
    "\n"
    "Query: {query}\n"
    "Document title: {title}\n"
    "Document text: {body}\n"
    "\n"
    "Reply with your analysis, then a final line exactly of the form\n"
    "label: <digit>\n";

constexpr const char* kQueryTemplate =
    "You write search queries for short-video content.\n"
    "Write one query, in the document's language, whose relevance to the\n"
    "document below is exactly level {target_label} on a 0-3 scale\n"
    "(3: complete match; 2: relevant with minor gaps; 1: partially relevant).\n"
    "\n"
    "Document title: {title}\n"
    "Document text: {body}\n"
    "\n"
    "Reply with the query text only.\n";

constexpr const char* kJudgeTemplate =
    "Two queries are compared against one document.\n"
    "\n"
    "Document title: {title}\n"
    "Document text: {body}\n"
    "Query A: {query_a}\n"
    "Query B: {query_b}\n"
    "\n"
    "Which query is more relevant to the document?\n"
    "Reply with a final line that is exactly one of:\n"
    "order: A\n"
    "order: B\n"
    "order: tie\n";

constexpr const char* kRewriteTemplate =
    "Rewrite the raw OCR and ASR transcripts of a short video into one\n"
    "coherent description of its content. If the inputs are too incoherent\n"
    "to rewrite, reply exactly: cannot rewrite\n"
    "\n"
    "OCR: {ocr}\n"
    "ASR: {asr}\n";

constexpr const char* kReasoningTemplate =
    "A query-document pair is annotated with relevance {label} on a 0-3\n"
    "scale. Explain step by step why this label fits the pair, then restate\n"
    "the label.\n"
    "\n"
    "Query: {query}\n"
    "Document title: {title}\n"
    "Document text: {body}\n"
    "\n"
    "End with a final line exactly of the form\n"
    "label: <digit>\n";

} // namespace

RoleTemplates RoleTemplates::defaults() {
    RoleTemplates t;
    t.score = {"score-default", kScoreTemplate, OutputGrammar::score_line};
    t.query = {"query-default", kQueryTemplate, OutputGrammar::plain_query};
    t.judge = {"judge-default", kJudgeTemplate, OutputGrammar::order_token};
    t.rewrite = {"rewrite-default", kRewriteTemplate, OutputGrammar::rewrite_text};
    t.reasoning = {"reasoning-default", kReasoningTemplate,
                   OutputGrammar::reasoning_then_score};
    return t;
}

ChatEndpoint::ChatEndpoint(EndpointConfig config, std::string api_key)
    : config_(std::move(config)), api_key_(std::move(api_key)) {
    config_.validate();
    if (config_.base_url.empty()) {
        throw Error(ErrorKind::config, "endpoint base_url is empty");
    }
}

std::string ChatEndpoint::complete(const std::string& prompt) const {
    // One client per call: connections are cheap at our request sizes and
    // this keeps concurrent batch calls independent.
    httplib::Client client(config_.base_url);
    const auto seconds = std::max<long long>(1, config_.timeout.count() / 1000);
    client.set_connection_timeout(seconds, 0);
    client.set_read_timeout(seconds, 0);
    client.set_write_timeout(seconds, 0);

    httplib::Headers headers;
    if (!api_key_.empty()) {
        headers.emplace("Authorization", "Bearer " + api_key_);
    }

    nlohmann::json body = {
        {"model", config_.model_name},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
        {"temperature", config_.temperature},
    };

    auto res = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");
    if (!res) {
        throw ModelError(ModelErrorKind::endpoint,
                         "transport failure: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw ModelError(ModelErrorKind::endpoint,
                         "endpoint returned HTTP " + std::to_string(res->status), res->body);
    }
    try {
        const auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(ModelErrorKind::endpoint,
                         std::string("malformed completion response: ") + e.what(), res->body);
    }
}

HttpModelClient::HttpModelClient(EndpointConfig config, std::string api_key,
                                 RoleTemplates templates)
    : endpoint_(std::move(config), std::move(api_key)), templates_(std::move(templates)) {}

ScoreJudgment HttpModelClient::score(const Query& query, const Document& doc) {
    if (text::normalize(query.text).empty() || doc.body.empty()) {
        throw Error(ErrorKind::precondition, "score: empty query text or document body");
    }
    const std::string prompt = templates_.score.render({
        {"query", query.text},
        {"title", doc.title},
        {"body", doc.body},
    });
    return with_retry(endpoint_.config().retry,
                      [&] { return parse_score_reply(endpoint_.complete(prompt)); });
}

Query HttpModelClient::generate_query(const Document& doc, RelevanceLabel target) {
    if (target.value() == 0) {
        throw Error(ErrorKind::precondition,
                    "generate_query: target label 0 pairs come from in-batch negatives");
    }
    if (doc.body.empty()) {
        throw Error(ErrorKind::precondition, "generate_query: empty document body");
    }
    const std::string prompt = templates_.query.render({
        {"title", doc.title},
        {"body", doc.body},
        {"target_label", std::to_string(target.value())},
    });
    return with_retry(endpoint_.config().retry, [&] {
        const std::string reply = trim(endpoint_.complete(prompt));
        if (text::normalize(reply).empty()) {
            throw ModelError(ModelErrorKind::generation, "blank generation", reply);
        }
        Query q;
        q.text = reply;
        return q;
    });
}

OrderJudgment HttpModelClient::judge_order(const Document& doc, const Query& query_a,
                                           const Query& query_b) {
    if (text::normalize(query_a.text) == text::normalize(query_b.text)) {
        throw Error(ErrorKind::precondition, "judge_order: identical queries");
    }
    const std::string prompt = templates_.judge.render({
        {"title", doc.title},
        {"body", doc.body},
        {"query_a", query_a.text},
        {"query_b", query_b.text},
    });
    return with_retry(endpoint_.config().retry,
                      [&] { return parse_order_reply(endpoint_.complete(prompt)); });
}

std::optional<std::string> HttpModelClient::rewrite_item(const std::string& ocr,
                                                         const std::string& asr) {
    if (ocr.empty() && asr.empty()) {
        throw Error(ErrorKind::precondition, "rewrite_item: both ocr and asr are empty");
    }
    const std::string prompt = templates_.rewrite.render({{"ocr", ocr}, {"asr", asr}});
    return with_retry(endpoint_.config().retry,
                      [&]() -> std::optional<std::string> {
                          const std::string reply = trim(endpoint_.complete(prompt));
                          if (text::normalize(reply) == "cannot rewrite") {
                              return std::nullopt; // valid decline, not an error
                          }
                          return reply;
                      });
}

std::string HttpModelClient::rationale(const Query& query, const Document& doc,
                                       RelevanceLabel label) {
    const std::string prompt = templates_.reasoning.render({
        {"query", query.text},
        {"title", doc.title},
        {"body", doc.body},
        {"label", std::to_string(label.value())},
    });
    return with_retry(endpoint_.config().retry, [&] {
        const std::string reply = endpoint_.complete(prompt);
        const ScoreJudgment judgment = parse_score_reply(reply);
        if (judgment.label != label) {
            throw ModelError(ModelErrorKind::score_parse,
                             "reasoning chain restates a different label", reply);
        }
        if (!judgment.rationale) {
            throw ModelError(ModelErrorKind::score_parse,
                             "reasoning chain is empty", reply);
        }
        return *judgment.rationale;
    });
}

} // namespace ssra::modelio
