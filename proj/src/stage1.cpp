// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#include "ssra/stage1.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "ssra/batch.hpp"
#include "ssra/text.hpp"
#include "ssra/util.hpp"

namespace ssra::stage1 {

nlohmann::json Stage1Report::to_json() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["n_unlabeled_in"] = n_unlabeled_in;
    j["n_scored"] = n_scored;
    j["n_parse_failures"] = n_parse_failures;
    j["n_label0_excluded"] = n_label0_excluded;
    j["label_histogram"] = label_histogram;
    j["failures"] = failure_messages;
    return j;
}

std::vector<PairRecord> relabel(const Corpus& unlabeled, modelio::ScoreClient& score_client,
                                const Stage1Options& options, Stage1Report& report) {
    report.n_unlabeled_in = unlabeled.records.size();

    const auto outcomes = modelio::run_batch(
        unlabeled.records,
        [&](const PairRecord& rec) {
            const Document* doc = unlabeled.find_document(rec.doc_id);
            if (doc == nullptr) {
                throw modelio::ModelError(modelio::ModelErrorKind::endpoint,
                                          "unknown doc_id: " + rec.doc_id);
            }
            return score_client.score(rec.query, *doc);
        },
        options.max_concurrency);

    std::vector<PairRecord> relabeled;
    relabeled.reserve(unlabeled.records.size());
    for (std::size_t i = 0; i < unlabeled.records.size(); ++i) {
        if (!outcomes[i].ok()) {
            ++report.n_parse_failures;
            std::ostringstream msg;
            msg << "pair " << i << " (query_id=" << unlabeled.records[i].query.query_id
                << ", doc_id=" << unlabeled.records[i].doc_id
                << "): " << modelio::to_string(outcomes[i].failure->kind) << ": "
                << outcomes[i].failure->message;
            report.failure_messages.push_back(msg.str());
            continue;
        }
        ++report.n_scored;
        const RelevanceLabel label = outcomes[i].value->label;
        report.label_histogram[static_cast<std::size_t>(label.value())] += 1;
        if (!options.include_label0 && label.value() == 0) {
            ++report.n_label0_excluded;
            continue;
        }
        PairRecord rec = unlabeled.records[i];
        rec.label = label;
        rec.provenance = Provenance::stage1_relabel;
        relabeled.push_back(std::move(rec));
    }
    return relabeled;
}

std::vector<D2QGroup> group_d2q(const std::vector<PairRecord>& labeled_pairs) {
    std::vector<D2QGroup> groups;
    std::unordered_map<std::string, std::size_t> group_index;
    std::unordered_set<std::string> seen_entries; // doc_id \x1F normalized query

    for (const PairRecord& rec : labeled_pairs) {
        if (!rec.label) {
            throw Error(ErrorKind::precondition, "group_d2q requires labeled pairs");
        }
        auto [it, inserted] = group_index.emplace(rec.doc_id, groups.size());
        if (inserted) {
            groups.push_back(D2QGroup{rec.doc_id, {}});
        }
        std::string entry_key = rec.doc_id;
        entry_key.push_back('\x1F');
        entry_key += text::normalize(rec.query.text);
        if (!seen_entries.insert(std::move(entry_key)).second) {
            continue; // duplicate normalized query for this doc, first wins
        }
        groups[it->second].entries.emplace_back(rec.query, *rec.label);
    }
    return groups;
}

namespace {

std::string pair_key(const PairRecord& rec) {
    std::string key = text::normalize(rec.query.text);
    key.push_back('\x1F');
    key += rec.doc_id;
    return key;
}

} // namespace

Corpus merge_stage1(const std::vector<PairRecord>& relabeled, const Corpus& deduped_labeled) {
    Corpus merged;
    merged.documents = deduped_labeled.documents;
    merged.doc_index = deduped_labeled.doc_index;

    std::unordered_set<std::string> taken;
    for (const PairRecord& rec : deduped_labeled.records) {
        taken.insert(pair_key(rec));
        merged.records.push_back(rec);
    }
    for (const PairRecord& rec : relabeled) {
        if (taken.insert(pair_key(rec)).second) {
            merged.records.push_back(rec);
        }
    }
    return merged;
}

Stage1Output run_stage1(const Corpus& unlabeled, const Corpus& deduped_labeled,
                        modelio::ScoreClient& score_client, const Stage1Options& options) {
    Stage1Output out;
    const std::vector<PairRecord> relabeled =
        relabel(unlabeled, score_client, options, out.report);
    out.merged = merge_stage1(relabeled, deduped_labeled);
    for (const auto& [doc_id, idx] : unlabeled.doc_index) {
        (void)idx;
        if (out.merged.find_document(doc_id) == nullptr) {
            out.merged.add_document(unlabeled.documents[unlabeled.doc_index.at(doc_id)]);
        }
    }
    out.d2q = group_d2q(out.merged.records);
    return out;
}

void save_d2q(const std::vector<D2QGroup>& groups, const std::filesystem::path& path) {
    std::ostringstream out;
    for (const D2QGroup& group : groups) {
        nlohmann::ordered_json j;
        j["doc_id"] = group.doc_id;
        nlohmann::ordered_json entries = nlohmann::ordered_json::array();
        for (const auto& [query, label] : group.entries) {
            entries.push_back({{"query_id", query.query_id},
                               {"query", query.text},
                               {"label", label.value()}});
        }
        j["entries"] = entries;
        out << j.dump() << '\n';
    }
    write_file(path, out.str());
}

std::vector<D2QGroup> load_d2q(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open d2q file: " + path.string());
    }
    std::vector<D2QGroup> groups;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            D2QGroup group;
            group.doc_id = j.at("doc_id").get<std::string>();
            for (const auto& e : j.at("entries")) {
                Query q{e.value("query_id", std::string{}), e.at("query").get<std::string>()};
                group.entries.emplace_back(std::move(q),
                                           RelevanceLabel(e.at("label").get<int>()));
            }
            groups.push_back(std::move(group));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) +
                                              ": malformed d2q line: " + e.what());
        }
    }
    return groups;
}

} // namespace ssra::stage1
