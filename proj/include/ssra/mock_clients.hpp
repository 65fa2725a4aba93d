// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>

#include "ssra/modelio.hpp"

// Deterministic stand-ins for the four model roles. Every mock is a pure
// function of (seed, inputs), so batched runs and reruns reproduce byte-
// identical pipelines with no network and no GPU.
namespace ssra::modelio::mock {

// Explicit-fixture scorer: label (and optional rationale) per
// (normalized query, doc_id); per-key failure injection; unknown keys
// raise an endpoint error so fixtures stay exhaustive.
class TableScoreMock : public ScoreClient, public ReasoningClient {
public:
    void set(const std::string& query_text, const std::string& doc_id, int label,
             std::optional<std::string> rationale = std::nullopt);
    void fail(const std::string& query_text, const std::string& doc_id,
              ModelErrorKind kind, std::string message);

    ScoreJudgment score(const Query& query, const Document& doc) override;
    std::string rationale(const Query& query, const Document& doc,
                          RelevanceLabel label) override;

private:
    struct Entry {
        int label = 0;
        std::optional<std::string> rationale;
        std::optional<std::pair<ModelErrorKind, std::string>> failure;
    };
    std::map<std::pair<std::string, std::string>, Entry> table_;
};

// Token-overlap scorer: J = max(jaccard(query, title), jaccard(query, body)),
// label 3/2/1 at J >= 0.75/0.5/0.25, else 0. A query equal to the title
// therefore scores 3.
class HeuristicScoreMock : public ScoreClient {
public:
    ScoreJudgment score(const Query& query, const Document& doc) override;
};

// Seeded query generator: text is the rendered pattern, by default
// "mock-q({doc_id},{target_label})". A {seed} slot is available for
// patterns that want seed-dependent output.
class TemplateQueryMock : public QueryClient {
public:
    explicit TemplateQueryMock(std::uint64_t seed = 0,
                               std::string pattern = "mock-q({doc_id},{target_label})");

    Query generate_query(const Document& doc, RelevanceLabel target) override;

private:
    std::uint64_t seed_;
    PromptTemplate pattern_;
};

// Recovers the target label a TemplateQueryMock embedded in a query text,
// if the text matches the default "mock-q(<doc_id>,<digit>)" shape.
std::optional<int> embedded_target_label(const std::string& query_text);

// Scores template-mock queries by their embedded target; anything else
// falls back to the Jaccard heuristic. Overrides plant specific predictions
// (or failures) for filter tests.
class PatternScoreMock : public ScoreClient {
public:
    void override_label(const std::string& query_text, const std::string& doc_id, int label);
    void override_failure(const std::string& query_text, const std::string& doc_id,
                          ModelErrorKind kind, std::string message);

    ScoreJudgment score(const Query& query, const Document& doc) override;

private:
    TableScoreMock overrides_;
    std::set<std::pair<std::string, std::string>> overridden_;
    HeuristicScoreMock heuristic_;
};

// Pairwise judge backed by a per-(doc, query) true-relevance value:
// overrides first, then the embedded template-mock target, then a seeded
// hash in [0,1). Verdicts compare the two values, so swapping arguments is
// antisymmetric and equal values yield a tie. Pair-level verdict overrides
// exist for planting intransitive fixtures (a single inverted pair cannot be
// expressed through values alone).
class RelevanceJudgeMock : public JudgeClient {
public:
    explicit RelevanceJudgeMock(std::uint64_t seed = 0) : seed_(seed) {}

    void set_relevance(const std::string& doc_id, const std::string& query_text,
                       double relevance);
    // Verdict for (query_a, query_b) in this order; the swapped order answers
    // with the mirrored verdict.
    void set_verdict(const std::string& doc_id, const std::string& query_a,
                     const std::string& query_b, OrderVerdict verdict);
    void fail_pair(const std::string& doc_id, const std::string& query_a,
                   const std::string& query_b, std::string message);

    OrderJudgment judge_order(const Document& doc, const Query& query_a,
                              const Query& query_b) override;

    double relevance_of(const Document& doc, const Query& query) const;

private:
    std::uint64_t seed_;
    std::map<std::pair<std::string, std::string>, double> relevance_;
    std::map<std::tuple<std::string, std::string, std::string>, OrderVerdict> verdicts_;
    std::map<std::tuple<std::string, std::string, std::string>, std::string> failures_;
};

// Rewriter: joins the non-empty inputs with a space and appends
// " rewritten"; configured keys decline instead (nullopt), which drives the
// caller's concatenation fallback.
class RewriteMock : public RewriteClient {
public:
    void decline(const std::string& ocr, const std::string& asr);
    void fail(const std::string& ocr, const std::string& asr, std::string message);

    std::optional<std::string> rewrite_item(const std::string& ocr,
                                            const std::string& asr) override;

private:
    std::set<std::pair<std::string, std::string>> declined_;
    std::map<std::pair<std::string, std::string>, std::string> failures_;
};

// Formulaic reasoning generator for chain-collection plumbing tests.
class FormulaReasoningMock : public ReasoningClient {
public:
    void fail(const std::string& query_text, const std::string& doc_id, std::string message);

    std::string rationale(const Query& query, const Document& doc,
                          RelevanceLabel label) override;

private:
    std::map<std::pair<std::string, std::string>, std::string> failures_;
};

} // namespace ssra::modelio::mock
