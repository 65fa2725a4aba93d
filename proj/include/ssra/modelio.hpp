// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssra/corpus.hpp"

namespace ssra::modelio {

enum class OutputGrammar {
    score_line,           // rationale lines, then "label: <digit>"
    plain_query,          // the whole reply is the query text
    order_token,          // final line "order: A" | "order: B" | "order: tie"
    rewrite_text,         // reply is the rewritten body, or "cannot rewrite"
    reasoning_then_score, // like score_line; the leading text is the chain
};

std::string to_string(OutputGrammar g);
OutputGrammar grammar_from_string(const std::string& s);

// A prompt with {slot} placeholders. Rendering is pure: identical template
// and slot values produce identical text; a slot referenced in the body but
// missing from the render call is an error.
struct PromptTemplate {
    std::string template_id;
    std::string body;
    OutputGrammar output_grammar = OutputGrammar::plain_query;

    std::string render(const std::map<std::string, std::string>& slots) const;
    std::vector<std::string> referenced_slots() const;

    static PromptTemplate load_file(const std::filesystem::path& path,
                                    std::string template_id, OutputGrammar grammar);
};

struct ScoreJudgment {
    RelevanceLabel label;
    std::optional<std::string> rationale;
};

enum class OrderVerdict { a_more_relevant, b_more_relevant, tie };

std::string to_string(OrderVerdict v);

struct OrderJudgment {
    OrderVerdict verdict;
};

enum class ModelErrorKind { endpoint, score_parse, judge_parse, generation };

std::string to_string(ModelErrorKind k);

// A model-call failure: transport trouble or a reply violating its grammar.
// Carries the raw reply so audit logs can show what the model actually said.
class ModelError : public std::runtime_error {
public:
    ModelError(ModelErrorKind kind, std::string message, std::string raw_reply = {})
        : std::runtime_error(std::move(message)), kind_(kind),
          raw_reply_(std::move(raw_reply)) {}

    ModelErrorKind kind() const { return kind_; }
    const std::string& raw_reply() const { return raw_reply_; }

private:
    ModelErrorKind kind_;
    std::string raw_reply_;
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds backoff{500}; // doubles after each failure
};

struct EndpointConfig {
    std::string base_url;
    std::string model_name;
    double temperature = 0.0;
    int max_concurrency = 8;
    RetryPolicy retry;
    std::chrono::milliseconds timeout{30000};

    void validate() const;
    static EndpointConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// --- reply grammars ---------------------------------------------------------

// Final non-empty line must be "label: <digit>" with the digit in 0..3;
// everything above it is the rationale. Throws ModelError(score_parse).
ScoreJudgment parse_score_reply(const std::string& reply);

// Final non-empty line must be "order: A", "order: B" or "order: tie".
// Throws ModelError(judge_parse).
OrderJudgment parse_order_reply(const std::string& reply);

// --- model role contracts ---------------------------------------------------

// All clients throw ModelError on failure and are safe to share across
// threads; batching is the caller's job (see batch.hpp).

class ScoreClient {
public:
    virtual ~ScoreClient() = default;
    virtual ScoreJudgment score(const Query& query, const Document& doc) = 0;
};

class QueryClient {
public:
    virtual ~QueryClient() = default;
    // target must be in {1,2,3}; label-0 pairs come from in-batch negatives.
    virtual Query generate_query(const Document& doc, RelevanceLabel target) = 0;
};

class JudgeClient {
public:
    virtual ~JudgeClient() = default;
    virtual OrderJudgment judge_order(const Document& doc, const Query& query_a,
                                      const Query& query_b) = 0;
};

class RewriteClient {
public:
    virtual ~RewriteClient() = default;
    // nullopt means the model declined to rewrite; the caller falls back to
    // the "{ocr};{asr}" concatenation. Empty-empty input is an error.
    virtual std::optional<std::string> rewrite_item(const std::string& ocr,
                                                    const std::string& asr) = 0;
};

class ReasoningClient {
public:
    virtual ~ReasoningClient() = default;
    // Produces the reasoning chain for a pair with a known label.
    virtual std::string rationale(const Query& query, const Document& doc,
                                  RelevanceLabel label) = 0;
};

// --- reasoning-chain collection ----------------------------------------------

struct LabeledPair {
    Query query;
    Document document;
    RelevanceLabel label;
};

struct ReasoningChains {
    struct Entry {
        LabeledPair pair;
        std::string rationale;
    };
    struct Failure {
        LabeledPair pair;
        std::string error;
    };
    std::vector<Entry> chains;
    std::vector<Failure> failures; // listed, never silently dropped
};

ReasoningChains collect_reasoning_chains(const std::vector<LabeledPair>& records,
                                         ReasoningClient& client, int max_concurrency);

void save_reasoning_chains(const ReasoningChains& chains, const std::filesystem::path& path);
std::size_t count_reasoning_chain_lines(const std::filesystem::path& path);

} // namespace ssra::modelio
