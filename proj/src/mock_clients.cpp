// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#include "ssra/mock_clients.hpp"

#include <algorithm>
#include <sstream>

#include "ssra/error.hpp"
#include "ssra/text.hpp"
#include "ssra/util.hpp"

namespace ssra::modelio::mock {

namespace {

std::pair<std::string, std::string> key_of(const std::string& query_text,
                                           const std::string& doc_id) {
    return {text::normalize(query_text), doc_id};
}

} // namespace

// --- TableScoreMock ----------------------------------------------------------

void TableScoreMock::set(const std::string& query_text, const std::string& doc_id,
                         int label, std::optional<std::string> rationale) {
    table_[key_of(query_text, doc_id)] = Entry{label, std::move(rationale), std::nullopt};
}

void TableScoreMock::fail(const std::string& query_text, const std::string& doc_id,
                          ModelErrorKind kind, std::string message) {
    Entry e;
    e.failure = std::make_pair(kind, std::move(message));
    table_[key_of(query_text, doc_id)] = std::move(e);
}

ScoreJudgment TableScoreMock::score(const Query& query, const Document& doc) {
    auto it = table_.find(key_of(query.text, doc.doc_id));
    if (it == table_.end()) {
        throw ModelError(ModelErrorKind::endpoint,
                         "no score fixture for (" + query.text + ", " + doc.doc_id + ")");
    }
    if (it->second.failure) {
        throw ModelError(it->second.failure->first, it->second.failure->second);
    }
    return ScoreJudgment{RelevanceLabel(it->second.label), it->second.rationale};
}

std::string TableScoreMock::rationale(const Query& query, const Document& doc,
                                      RelevanceLabel label) {
    auto it = table_.find(key_of(query.text, doc.doc_id));
    if (it != table_.end() && it->second.failure) {
        throw ModelError(it->second.failure->first, it->second.failure->second);
    }
    if (it != table_.end() && it->second.rationale) {
        return *it->second.rationale;
    }
    std::ostringstream out;
    out << "the query \"" << query.text << "\" matches document " << doc.doc_id
        << " at level " << label.value() << " (table mock)";
    return out.str();
}

// --- HeuristicScoreMock --------------------------------------------------------

ScoreJudgment HeuristicScoreMock::score(const Query& query, const Document& doc) {
    if (text::normalize(query.text).empty() || doc.body.empty()) {
        throw ModelError(ModelErrorKind::endpoint, "empty query or document body");
    }
    const double j = std::max(text::jaccard(query.text, doc.title),
                              text::jaccard(query.text, doc.body));
    int label = 0;
    if (j >= 0.75) {
        label = 3;
    } else if (j >= 0.5) {
        label = 2;
    } else if (j >= 0.25) {
        label = 1;
    }
    std::ostringstream rationale;
    rationale << "token overlap " << j;
    return ScoreJudgment{RelevanceLabel(label), rationale.str()};
}

// --- TemplateQueryMock ----------------------------------------------------------

TemplateQueryMock::TemplateQueryMock(std::uint64_t seed, std::string pattern)
    : seed_(seed) {
    pattern_.template_id = "mock-query-pattern";
    pattern_.body = std::move(pattern);
    pattern_.output_grammar = OutputGrammar::plain_query;
}

Query TemplateQueryMock::generate_query(const Document& doc, RelevanceLabel target) {
    if (target.value() == 0) {
        throw Error(ErrorKind::precondition,
                    "generate_query: target label 0 pairs come from in-batch negatives");
    }
    if (doc.body.empty()) {
        throw ModelError(ModelErrorKind::generation,
                         "document " + doc.doc_id + " has an empty body");
    }
    const std::map<std::string, std::string> slots = {
        {"doc_id", doc.doc_id},
        {"target_label", std::to_string(target.value())},
        {"title", doc.title},
        {"seed", std::to_string(seed_)},
    };
    Query q;
    q.text = pattern_.render(slots);
    if (text::normalize(q.text).empty()) {
        throw ModelError(ModelErrorKind::generation, "mock pattern rendered blank text");
    }
    return q;
}

std::optional<int> embedded_target_label(const std::string& query_text) {
    const std::string norm = text::normalize(query_text);
    const std::string prefix = "mock-q(";
    if (norm.size() < prefix.size() + 3 || norm.compare(0, prefix.size(), prefix) != 0 ||
        norm.back() != ')') {
        return std::nullopt;
    }
    const std::size_t comma = norm.rfind(',');
    if (comma == std::string::npos || comma + 2 != norm.size() - 1) {
        return std::nullopt;
    }
    const char digit = norm[comma + 1];
    if (digit < '0' || digit > '3') {
        return std::nullopt;
    }
    return digit - '0';
}

// --- PatternScoreMock ------------------------------------------------------------

void PatternScoreMock::override_label(const std::string& query_text,
                                      const std::string& doc_id, int label) {
    overrides_.set(query_text, doc_id, label);
    overridden_.insert(key_of(query_text, doc_id));
}

void PatternScoreMock::override_failure(const std::string& query_text,
                                        const std::string& doc_id, ModelErrorKind kind,
                                        std::string message) {
    overrides_.fail(query_text, doc_id, kind, std::move(message));
    overridden_.insert(key_of(query_text, doc_id));
}

ScoreJudgment PatternScoreMock::score(const Query& query, const Document& doc) {
    if (overridden_.count(key_of(query.text, doc.doc_id))) {
        return overrides_.score(query, doc);
    }
    if (const auto target = embedded_target_label(query.text)) {
        return ScoreJudgment{RelevanceLabel(*target), "embedded target (pattern mock)"};
    }
    return heuristic_.score(query, doc);
}

// --- RelevanceJudgeMock ------------------------------------------------------------

void RelevanceJudgeMock::set_relevance(const std::string& doc_id,
                                       const std::string& query_text, double relevance) {
    relevance_[{doc_id, text::normalize(query_text)}] = relevance;
}

void RelevanceJudgeMock::set_verdict(const std::string& doc_id, const std::string& query_a,
                                     const std::string& query_b, OrderVerdict verdict) {
    verdicts_[{doc_id, text::normalize(query_a), text::normalize(query_b)}] = verdict;
}

void RelevanceJudgeMock::fail_pair(const std::string& doc_id, const std::string& query_a,
                                   const std::string& query_b, std::string message) {
    failures_[{doc_id, text::normalize(query_a), text::normalize(query_b)}] =
        std::move(message);
}

double RelevanceJudgeMock::relevance_of(const Document& doc, const Query& query) const {
    auto it = relevance_.find({doc.doc_id, text::normalize(query.text)});
    if (it != relevance_.end()) {
        return it->second;
    }
    if (const auto target = embedded_target_label(query.text)) {
        return static_cast<double>(*target);
    }
    const std::uint64_t h =
        fnv1a64(std::to_string(seed_) + "\x1F" + doc.doc_id + "\x1F" + text::normalize(query.text));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

OrderJudgment RelevanceJudgeMock::judge_order(const Document& doc, const Query& query_a,
                                              const Query& query_b) {
    const std::string na = text::normalize(query_a.text);
    const std::string nb = text::normalize(query_b.text);
    if (na == nb) {
        throw Error(ErrorKind::precondition, "judge_order: identical queries");
    }
    auto fit = failures_.find({doc.doc_id, na, nb});
    if (fit == failures_.end()) {
        fit = failures_.find({doc.doc_id, nb, na});
    }
    if (fit != failures_.end()) {
        throw ModelError(ModelErrorKind::judge_parse, fit->second);
    }
    if (auto vit = verdicts_.find({doc.doc_id, na, nb}); vit != verdicts_.end()) {
        return OrderJudgment{vit->second};
    }
    if (auto vit = verdicts_.find({doc.doc_id, nb, na}); vit != verdicts_.end()) {
        OrderVerdict mirrored = vit->second;
        if (mirrored == OrderVerdict::a_more_relevant) {
            mirrored = OrderVerdict::b_more_relevant;
        } else if (mirrored == OrderVerdict::b_more_relevant) {
            mirrored = OrderVerdict::a_more_relevant;
        }
        return OrderJudgment{mirrored};
    }
    const double ra = relevance_of(doc, query_a);
    const double rb = relevance_of(doc, query_b);
    if (ra > rb) return OrderJudgment{OrderVerdict::a_more_relevant};
    if (rb > ra) return OrderJudgment{OrderVerdict::b_more_relevant};
    return OrderJudgment{OrderVerdict::tie};
}

// --- RewriteMock ----------------------------------------------------------------

void RewriteMock::decline(const std::string& ocr, const std::string& asr) {
    declined_.insert({ocr, asr});
}

void RewriteMock::fail(const std::string& ocr, const std::string& asr, std::string message) {
    failures_[{ocr, asr}] = std::move(message);
}

std::optional<std::string> RewriteMock::rewrite_item(const std::string& ocr,
                                                     const std::string& asr) {
    if (ocr.empty() && asr.empty()) {
        throw Error(ErrorKind::precondition, "rewrite_item: both ocr and asr are empty");
    }
    auto fit = failures_.find({ocr, asr});
    if (fit != failures_.end()) {
        throw ModelError(ModelErrorKind::endpoint, fit->second);
    }
    if (declined_.count({ocr, asr})) {
        return std::nullopt;
    }
    std::string out;
    if (!ocr.empty()) {
        out = ocr;
    }
    if (!asr.empty()) {
        if (!out.empty()) {
            out += ' ';
        }
        out += asr;
    }
    return out + " rewritten";
}

// --- FormulaReasoningMock --------------------------------------------------------

void FormulaReasoningMock::fail(const std::string& query_text, const std::string& doc_id,
                                std::string message) {
    failures_[key_of(query_text, doc_id)] = std::move(message);
}

std::string FormulaReasoningMock::rationale(const Query& query, const Document& doc,
                                            RelevanceLabel label) {
    auto it = failures_.find(key_of(query.text, doc.doc_id));
    if (it != failures_.end()) {
        throw ModelError(ModelErrorKind::endpoint, it->second);
    }
    std::ostringstream out;
    out << "step 1: compare \"" << query.text << "\" against document " << doc.doc_id
        << "; step 2: the pair supports level " << label.value();
    return out.str();
}

} // namespace ssra::modelio::mock
