// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#include "ssra/stage2.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "ssra/batch.hpp"
#include "ssra/text.hpp"
#include "ssra/util.hpp"

namespace ssra::stage2 {

void SynthesisPlan::validate() const {
    if (target_labels.empty()) {
        throw Error(ErrorKind::precondition, "synthesis plan has no target labels");
    }
    for (const RelevanceLabel& label : target_labels) {
        if (label.value() == 0) {
            throw Error(ErrorKind::precondition,
                        "target label 0 is not synthesizable (in-batch negatives)");
        }
    }
    if (per_doc_per_label < 1) {
        throw Error(ErrorKind::precondition, "per_doc_per_label must be >= 1");
    }
}

std::string to_string(FilterVerdict v) {
    switch (v) {
    case FilterVerdict::kept: return "kept";
    case FilterVerdict::dropped_score_mismatch: return "dropped_score_mismatch";
    case FilterVerdict::dropped_pairwise_inconsistent: return "dropped_pairwise_inconsistent";
    }
    throw Error(ErrorKind::parse, "invalid filter verdict");
}

nlohmann::ordered_json FilterDecision::to_json() const {
    nlohmann::ordered_json j;
    j["query_id"] = query_id;
    j["doc_id"] = doc_id;
    j["verdict"] = to_string(verdict);
    nlohmann::ordered_json detail = nlohmann::ordered_json::object();
    if (predicted_label) detail["predicted_label"] = *predicted_label;
    if (counterpart_query_id) detail["counterpart_query_id"] = *counterpart_query_id;
    if (verdict_token) detail["verdict_token"] = *verdict_token;
    if (error) detail["error"] = *error;
    j["detail"] = detail;
    return j;
}

nlohmann::ordered_json PairJudgment::to_json() const {
    nlohmann::ordered_json j;
    j["doc_id"] = doc_id;
    j["query_a_id"] = query_a_id;
    j["query_b_id"] = query_b_id;
    j["label_a"] = label_a;
    j["label_b"] = label_b;
    j["verdict"] = verdict_token;
    j["inconsistent"] = inconsistent;
    if (error) j["error"] = *error;
    return j;
}

SynthesisResult synthesize(const SynthesisPlan& plan, const Corpus& docs,
                           modelio::QueryClient& query_client, int max_concurrency) {
    plan.validate();
    for (const std::string& doc_id : plan.doc_ids) {
        if (docs.find_document(doc_id) == nullptr) {
            throw Error(ErrorKind::precondition, "synthesis plan names unknown doc_id: " + doc_id);
        }
    }

    struct Slot {
        const Document* doc;
        RelevanceLabel label;
        int k;
    };
    std::vector<Slot> slots;
    slots.reserve(plan.doc_ids.size() * plan.target_labels.size() *
                  static_cast<std::size_t>(plan.per_doc_per_label));
    for (const std::string& doc_id : plan.doc_ids) {
        const Document* doc = docs.find_document(doc_id);
        for (const RelevanceLabel& label : plan.target_labels) {
            for (int k = 0; k < plan.per_doc_per_label; ++k) {
                slots.push_back(Slot{doc, label, k});
            }
        }
    }

    const auto outcomes = modelio::run_batch(
        slots,
        [&](const Slot& slot) { return query_client.generate_query(*slot.doc, slot.label); },
        max_concurrency);

    SynthesisResult result;
    std::unordered_set<std::string> referenced_docs;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        const Slot& slot = slots[i];
        if (!outcomes[i].ok()) {
            std::ostringstream msg;
            msg << "slot (doc_id=" << slot.doc->doc_id << ", target=" << slot.label.value()
                << ", k=" << slot.k << "): " << outcomes[i].failure->message;
            result.failures.push_back(msg.str());
            continue;
        }
        PairRecord rec;
        rec.query = *outcomes[i].value;
        std::ostringstream qid;
        qid << "syn-" << slot.doc->doc_id << "-s" << slot.label.value() << "-" << slot.k;
        rec.query.query_id = qid.str();
        rec.doc_id = slot.doc->doc_id;
        rec.label = slot.label;
        rec.provenance = Provenance::synthetic_raw;
        rec.set_target_label(slot.label.value());
        result.synthetic.records.push_back(std::move(rec));
        if (referenced_docs.insert(slot.doc->doc_id).second) {
            result.synthetic.add_document(*slot.doc);
        }
    }
    return result;
}

ScoreFilterResult filter_by_score(const Corpus& synthetic, modelio::ScoreClient& score_client,
                                  int max_concurrency) {
    for (const PairRecord& rec : synthetic.records) {
        if (!rec.target_label()) {
            throw Error(ErrorKind::precondition,
                        "filter_by_score requires meta.target_label on every record");
        }
    }

    const auto outcomes = modelio::run_batch(
        synthetic.records,
        [&](const PairRecord& rec) {
            const Document* doc = synthetic.find_document(rec.doc_id);
            if (doc == nullptr) {
                throw modelio::ModelError(modelio::ModelErrorKind::endpoint,
                                          "unknown doc_id: " + rec.doc_id);
            }
            return score_client.score(rec.query, *doc);
        },
        max_concurrency);

    ScoreFilterResult result;
    result.kept.documents = synthetic.documents;
    result.kept.doc_index = synthetic.doc_index;
    for (std::size_t i = 0; i < synthetic.records.size(); ++i) {
        const PairRecord& rec = synthetic.records[i];
        FilterDecision decision;
        decision.query_id = rec.query.query_id;
        decision.doc_id = rec.doc_id;
        if (!outcomes[i].ok()) {
            decision.verdict = FilterVerdict::dropped_score_mismatch;
            decision.error = modelio::to_string(outcomes[i].failure->kind) + ": " +
                             outcomes[i].failure->message;
        } else {
            const int predicted = outcomes[i].value->label.value();
            decision.predicted_label = predicted;
            if (predicted == *rec.target_label()) {
                decision.verdict = FilterVerdict::kept;
                PairRecord kept = rec;
                kept.provenance = Provenance::synthetic_filtered;
                kept.label = RelevanceLabel(predicted);
                result.kept.records.push_back(std::move(kept));
            } else {
                decision.verdict = FilterVerdict::dropped_score_mismatch;
            }
        }
        result.decisions.push_back(std::move(decision));
    }
    return result;
}

PairwiseFilterResult filter_pairwise(const Corpus& kept, modelio::JudgeClient& judge_client,
                                     int max_concurrency) {
    for (const PairRecord& rec : kept.records) {
        if (!rec.label) {
            throw Error(ErrorKind::precondition, "filter_pairwise requires labeled records");
        }
    }

    // Group record indices per doc_id in first-appearance order.
    std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
    std::unordered_map<std::string, std::size_t> group_index;
    for (std::size_t i = 0; i < kept.records.size(); ++i) {
        const std::string& doc_id = kept.records[i].doc_id;
        auto [it, inserted] = group_index.emplace(doc_id, groups.size());
        if (inserted) {
            groups.emplace_back(doc_id, std::vector<std::size_t>{});
        }
        groups[it->second].second.push_back(i);
    }

    // Canonical pair list: within each doc every unordered pair of records
    // with differing labels, lower label first (presented as A).
    struct PairReq {
        std::size_t low;  // record index with the lower label
        std::size_t high; // record index with the higher label
    };
    std::vector<PairReq> pairs;
    for (const auto& [doc_id, members] : groups) {
        (void)doc_id;
        for (std::size_t a = 0; a < members.size(); ++a) {
            for (std::size_t b = a + 1; b < members.size(); ++b) {
                const int la = kept.records[members[a]].label->value();
                const int lb = kept.records[members[b]].label->value();
                if (la == lb) {
                    continue;
                }
                if (la < lb) {
                    pairs.push_back(PairReq{members[a], members[b]});
                } else {
                    pairs.push_back(PairReq{members[b], members[a]});
                }
            }
        }
    }

    const auto outcomes = modelio::run_batch(
        pairs,
        [&](const PairReq& pair) {
            const PairRecord& low = kept.records[pair.low];
            const PairRecord& high = kept.records[pair.high];
            const Document* doc = kept.find_document(low.doc_id);
            if (doc == nullptr) {
                throw modelio::ModelError(modelio::ModelErrorKind::endpoint,
                                          "unknown doc_id: " + low.doc_id);
            }
            return judge_client.judge_order(*doc, low.query, high.query);
        },
        max_concurrency);

    PairwiseFilterResult result;
    std::vector<std::optional<std::pair<std::string, std::string>>> drop_cause(
        kept.records.size()); // counterpart query_id + verdict token

    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const PairRecord& low = kept.records[pairs[p].low];
        const PairRecord& high = kept.records[pairs[p].high];
        PairJudgment judgment;
        judgment.doc_id = low.doc_id;
        judgment.query_a_id = low.query.query_id;
        judgment.query_b_id = high.query.query_id;
        judgment.label_a = low.label->value();
        judgment.label_b = high.label->value();

        if (!outcomes[p].ok()) {
            judgment.verdict_token = "error";
            judgment.inconsistent = true; // conservative: an unjudgable pair is dropped
            judgment.error = outcomes[p].failure->message;
        } else {
            judgment.verdict_token = modelio::to_string(outcomes[p].value->verdict);
            // A is the lower-labeled query; A winning contradicts the labels.
            judgment.inconsistent =
                outcomes[p].value->verdict == modelio::OrderVerdict::a_more_relevant;
        }
        if (judgment.inconsistent) {
            if (!drop_cause[pairs[p].low]) {
                drop_cause[pairs[p].low] = {high.query.query_id, judgment.verdict_token};
            }
            if (!drop_cause[pairs[p].high]) {
                drop_cause[pairs[p].high] = {low.query.query_id, judgment.verdict_token};
            }
        }
        result.judgments.push_back(std::move(judgment));
    }

    result.refined.documents = kept.documents;
    result.refined.doc_index = kept.doc_index;
    for (std::size_t i = 0; i < kept.records.size(); ++i) {
        const PairRecord& rec = kept.records[i];
        FilterDecision decision;
        decision.query_id = rec.query.query_id;
        decision.doc_id = rec.doc_id;
        if (drop_cause[i]) {
            decision.verdict = FilterVerdict::dropped_pairwise_inconsistent;
            decision.counterpart_query_id = drop_cause[i]->first;
            decision.verdict_token = drop_cause[i]->second;
        } else {
            decision.verdict = FilterVerdict::kept;
            result.refined.records.push_back(rec);
        }
        result.decisions.push_back(std::move(decision));
    }
    return result;
}

namespace {

std::string pair_key(const PairRecord& rec) {
    std::string key = text::normalize(rec.query.text);
    key.push_back('\x1F');
    key += rec.doc_id;
    return key;
}

} // namespace

Corpus assemble_enriched(const Corpus& refined_synthetic, const Corpus& stage1_corpus) {
    Corpus out;
    out.documents = stage1_corpus.documents;
    out.doc_index = stage1_corpus.doc_index;
    for (const Document& doc : refined_synthetic.documents) {
        out.add_document(doc);
    }

    std::unordered_set<std::string> taken;
    for (const PairRecord& rec : stage1_corpus.records) {
        if (taken.insert(pair_key(rec)).second) {
            out.records.push_back(rec);
        }
    }
    for (const PairRecord& rec : refined_synthetic.records) {
        if (taken.insert(pair_key(rec)).second) {
            out.records.push_back(rec);
        }
    }
    return out;
}

void save_decisions(const std::vector<FilterDecision>& decisions,
                    const std::filesystem::path& path) {
    std::ostringstream out;
    for (const FilterDecision& d : decisions) {
        out << d.to_json().dump() << '\n';
    }
    write_file(path, out.str());
}

void save_judgments(const std::vector<PairJudgment>& judgments,
                    const std::filesystem::path& path) {
    std::ostringstream out;
    for (const PairJudgment& j : judgments) {
        out << j.to_json().dump() << '\n';
    }
    write_file(path, out.str());
}

} // namespace ssra::stage2
