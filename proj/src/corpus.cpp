// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#include "ssra/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "ssra/text.hpp"
#include "ssra/util.hpp"

namespace ssra {

std::string to_string(Provenance p) {
    switch (p) {
    case Provenance::annotated: return "annotated";
    case Provenance::stage1_relabel: return "stage1_relabel";
    case Provenance::synthetic_raw: return "synthetic_raw";
    case Provenance::synthetic_filtered: return "synthetic_filtered";
    }
    throw Error(ErrorKind::parse, "invalid provenance value");
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "annotated") return Provenance::annotated;
    if (s == "stage1_relabel") return Provenance::stage1_relabel;
    if (s == "synthetic_raw") return Provenance::synthetic_raw;
    if (s == "synthetic_filtered") return Provenance::synthetic_filtered;
    throw Error(ErrorKind::parse, "unknown provenance: " + s);
}

std::optional<int> PairRecord::target_label() const {
    if (!meta.is_object() || !meta.contains("target_label")) {
        return std::nullopt;
    }
    const auto& v = meta.at("target_label");
    if (!v.is_number_integer()) {
        throw Error(ErrorKind::parse, "meta.target_label must be an integer");
    }
    return v.get<int>();
}

void PairRecord::set_target_label(int label) {
    meta["target_label"] = label;
}

void Corpus::add_document(Document doc) {
    if (doc.doc_id.empty()) {
        throw Error(ErrorKind::parse, "document with empty doc_id");
    }
    auto it = doc_index.find(doc.doc_id);
    if (it != doc_index.end()) {
        const Document& old = documents[it->second];
        const bool same = old.title == doc.title && old.body == doc.body &&
                          old.ocr == doc.ocr && old.asr == doc.asr;
        if (!same) {
            throw Error(ErrorKind::parse,
                        "conflicting content for duplicate doc_id: " + doc.doc_id);
        }
        return;
    }
    doc_index.emplace(doc.doc_id, documents.size());
    documents.push_back(std::move(doc));
}

const Document* Corpus::find_document(const std::string& doc_id) const {
    auto it = doc_index.find(doc_id);
    return it == doc_index.end() ? nullptr : &documents[it->second];
}

bool Corpus::all_labeled() const {
    return std::all_of(records.begin(), records.end(),
                       [](const PairRecord& r) { return r.label.has_value(); });
}

std::string render_document(const Document& doc) {
    return doc.title + "\n" + doc.body;
}

// --- persistence -----------------------------------------------------------

namespace {

void validate_record(const PairRecord& rec) {
    if (text::normalize(rec.query.text).empty()) {
        throw Error(ErrorKind::parse, "empty query text");
    }
    if (rec.doc_id.empty()) {
        throw Error(ErrorKind::parse, "empty doc_id");
    }
    const bool needs_label = rec.provenance == Provenance::stage1_relabel ||
                             is_synthetic(rec.provenance);
    if (needs_label && !rec.label.has_value()) {
        throw Error(ErrorKind::parse,
                    "record with provenance " + to_string(rec.provenance) +
                        " is missing a label");
    }
    if (is_synthetic(rec.provenance)) {
        const auto target = rec.target_label();
        if (!target || *target < 1 || *target > 3) {
            throw Error(ErrorKind::parse,
                        "synthetic record requires meta.target_label in {1,2,3}");
        }
    }
}

} // namespace

PairRecord record_from_json(const nlohmann::json& j, CorpusSchema schema) {
    if (!j.is_object()) {
        throw Error(ErrorKind::parse, "record is not a JSON object");
    }
    PairRecord rec;
    rec.query.query_id = j.value("query_id", std::string{});
    if (!j.contains("query") || !j.at("query").is_string()) {
        throw Error(ErrorKind::parse, "missing \"query\" string field");
    }
    rec.query.text = j.at("query").get<std::string>();
    if (!j.contains("doc_id") || !j.at("doc_id").is_string()) {
        throw Error(ErrorKind::parse, "missing \"doc_id\" string field");
    }
    rec.doc_id = j.at("doc_id").get<std::string>();

    if (j.contains("label")) {
        if (schema == CorpusSchema::unlabeled) {
            throw Error(ErrorKind::parse, "unlabeled schema forbids \"label\"");
        }
        if (!j.at("label").is_number_integer()) {
            throw Error(ErrorKind::parse, "label must be an integer");
        }
        rec.label = RelevanceLabel(j.at("label").get<int>());
    } else if (schema == CorpusSchema::labeled) {
        throw Error(ErrorKind::parse, "labeled schema requires \"label\"");
    }

    if (j.contains("provenance")) {
        rec.provenance = provenance_from_string(j.at("provenance").get<std::string>());
    }
    if (j.contains("meta")) {
        if (!j.at("meta").is_object()) {
            throw Error(ErrorKind::parse, "meta must be a JSON object");
        }
        rec.meta = j.at("meta");
    }
    validate_record(rec);
    return rec;
}

nlohmann::ordered_json record_to_json(const PairRecord& rec) {
    nlohmann::ordered_json j;
    j["query_id"] = rec.query.query_id;
    j["query"] = rec.query.text;
    j["doc_id"] = rec.doc_id;
    if (rec.label) {
        j["label"] = rec.label->value();
    }
    j["provenance"] = to_string(rec.provenance);
    if (!rec.meta.empty()) {
        j["meta"] = rec.meta;
    }
    return j;
}

Corpus load_corpus(const std::filesystem::path& records_path, CorpusSchema schema) {
    std::ifstream in(records_path);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open corpus file: " + records_path.string());
    }
    Corpus corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::parse, records_path.string() + ":" +
                                              std::to_string(line_no) +
                                              ": malformed JSON: " + e.what());
        }
        try {
            corpus.records.push_back(record_from_json(j, schema));
        } catch (const Error& e) {
            throw Error(e.kind(), records_path.string() + ":" +
                                      std::to_string(line_no) + ": " + e.what());
        }
    }
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& records_path) {
    std::ostringstream out;
    for (const PairRecord& rec : corpus.records) {
        out << record_to_json(rec).dump() << '\n';
    }
    write_file(records_path, out.str());
}

std::vector<Document> load_documents(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open document file: " + path.string());
    }
    std::vector<Document> docs;
    std::unordered_map<std::string, std::size_t> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) +
                                              ": malformed JSON: " + e.what());
        }
        Document doc;
        doc.doc_id = j.value("doc_id", std::string{});
        doc.title = j.value("title", std::string{});
        doc.body = j.value("body", std::string{});
        if (j.contains("ocr")) doc.ocr = j.at("ocr").get<std::string>();
        if (j.contains("asr")) doc.asr = j.at("asr").get<std::string>();
        if (doc.doc_id.empty()) {
            throw Error(ErrorKind::parse,
                        path.string() + ":" + std::to_string(line_no) + ": empty doc_id");
        }
        auto it = seen.find(doc.doc_id);
        if (it != seen.end()) {
            const Document& old = docs[it->second];
            const bool same = old.title == doc.title && old.body == doc.body &&
                              old.ocr == doc.ocr && old.asr == doc.asr;
            if (!same) {
                throw Error(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) +
                                                  ": conflicting duplicate doc_id " + doc.doc_id);
            }
            continue;
        }
        seen.emplace(doc.doc_id, docs.size());
        docs.push_back(std::move(doc));
    }
    return docs;
}

void save_documents(const std::vector<Document>& docs, const std::filesystem::path& path) {
    std::ostringstream out;
    for (const Document& doc : docs) {
        nlohmann::ordered_json j;
        j["doc_id"] = doc.doc_id;
        j["title"] = doc.title;
        j["body"] = doc.body;
        if (doc.ocr) j["ocr"] = *doc.ocr;
        if (doc.asr) j["asr"] = *doc.asr;
        out << j.dump() << '\n';
    }
    write_file(path, out.str());
}

// --- operations -------------------------------------------------------------

CorpusStats compute_stats(const Corpus& corpus, LengthMetric metric) {
    CorpusStats stats;
    stats.length_metric = metric;
    stats.size = corpus.records.size();
    if (stats.size == 0) {
        return stats;
    }
    if (!corpus.all_labeled()) {
        throw Error(ErrorKind::precondition, "compute_stats requires a labeled corpus");
    }

    const auto measure = [metric](std::string_view s) {
        return metric == LengthMetric::chars ? text::length_chars(s)
                                             : text::length_ws_tokens(s);
    };

    // Distinct queries keyed on normalized text; lengths from the first
    // occurrence's raw text.
    std::unordered_set<std::string> query_keys;
    std::size_t query_len_sum = 0;
    std::unordered_set<std::string> doc_ids;
    std::size_t doc_len_sum = 0;

    for (const PairRecord& rec : corpus.records) {
        stats.label_count[static_cast<std::size_t>(rec.label->value())] += 1;
        if (query_keys.insert(text::normalize(rec.query.text)).second) {
            query_len_sum += measure(rec.query.text);
        }
        if (doc_ids.insert(rec.doc_id).second) {
            if (const Document* doc = corpus.find_document(rec.doc_id)) {
                doc_len_sum += measure(render_document(*doc));
                stats.n_docs_resolved += 1;
            }
        }
    }

    stats.n_queries = query_keys.size();
    stats.n_docs = doc_ids.size();
    for (std::size_t i = 0; i < 4; ++i) {
        stats.label_percent[i] =
            100.0 * static_cast<double>(stats.label_count[i]) / static_cast<double>(stats.size);
    }
    stats.avg_query_len = stats.n_queries == 0
                              ? 0.0
                              : static_cast<double>(query_len_sum) / static_cast<double>(stats.n_queries);
    stats.avg_doc_len = stats.n_docs_resolved == 0
                            ? 0.0
                            : static_cast<double>(doc_len_sum) / static_cast<double>(stats.n_docs_resolved);
    return stats;
}

nlohmann::json CorpusStats::to_json() const {
    nlohmann::json j;
    j["size"] = size;
    if (size == 0) {
        j["label_percent"] = nullptr; // undefined for an empty corpus
    } else {
        j["label_percent"] = label_percent;
    }
    j["label_count"] = label_count;
    j["n_queries"] = n_queries;
    j["n_docs"] = n_docs;
    j["n_docs_resolved"] = n_docs_resolved;
    j["avg_query_len"] = avg_query_len;
    j["avg_doc_len"] = avg_doc_len;
    j["length_metric"] = length_metric == LengthMetric::chars ? "chars" : "ws_tokens";
    return j;
}

Corpus dedup_for_query_model(const Corpus& corpus) {
    if (!corpus.all_labeled()) {
        throw Error(ErrorKind::precondition, "dedup_for_query_model requires a labeled corpus");
    }
    Corpus out;
    out.documents = corpus.documents;
    out.doc_index = corpus.doc_index;
    std::unordered_set<std::string> seen;
    for (const PairRecord& rec : corpus.records) {
        std::string key = text::normalize(rec.query.text);
        key.push_back('\x1F');
        key.push_back(static_cast<char>('0' + rec.label->value()));
        if (seen.insert(std::move(key)).second) {
            out.records.push_back(rec);
        }
    }
    return out;
}

Corpus make_binary_subset(const Corpus& corpus) {
    if (!corpus.all_labeled()) {
        throw Error(ErrorKind::precondition, "make_binary_subset requires a labeled corpus");
    }
    Corpus out;
    out.documents = corpus.documents;
    out.doc_index = corpus.doc_index;
    for (const PairRecord& rec : corpus.records) {
        const int v = rec.label->value();
        if (v == 0 || v == 3) {
            out.records.push_back(rec);
        }
    }
    return out;
}

Corpus make_balanced_testset(const Corpus& corpus, std::size_t n_per_label,
                             std::uint64_t seed) {
    if (!corpus.all_labeled()) {
        throw Error(ErrorKind::precondition, "make_balanced_testset requires a labeled corpus");
    }
    std::array<std::vector<std::size_t>, 4> by_label;
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        by_label[static_cast<std::size_t>(corpus.records[i].label->value())].push_back(i);
    }
    for (int label = 0; label < 4; ++label) {
        const auto have = by_label[static_cast<std::size_t>(label)].size();
        if (have < n_per_label) {
            std::ostringstream msg;
            msg << "label " << label << ": need " << n_per_label << " records, have "
                << have << " (short " << (n_per_label - have) << ")";
            throw Error(ErrorKind::precondition, msg.str());
        }
    }

    SplitMix64 rng(seed);
    std::vector<std::size_t> chosen;
    chosen.reserve(4 * n_per_label);
    for (int label = 0; label < 4; ++label) {
        auto& pool = by_label[static_cast<std::size_t>(label)];
        // Partial Fisher-Yates: the first n_per_label slots become the sample.
        for (std::size_t i = 0; i < n_per_label; ++i) {
            const std::size_t j = i + rng.below(pool.size() - i);
            std::swap(pool[i], pool[j]);
            chosen.push_back(pool[i]);
        }
    }
    std::sort(chosen.begin(), chosen.end());

    Corpus out;
    out.documents = corpus.documents;
    out.doc_index = corpus.doc_index;
    out.records.reserve(chosen.size());
    for (std::size_t idx : chosen) {
        out.records.push_back(corpus.records[idx]);
    }
    return out;
}

Document assemble_document(std::string doc_id, std::string title,
                           std::optional<std::string> ocr,
                           std::optional<std::string> asr,
                           std::optional<std::string> rewritten) {
    const bool any_source = (ocr && !ocr->empty()) || (asr && !asr->empty()) ||
                            (rewritten && !rewritten->empty());
    if (!any_source) {
        throw Error(ErrorKind::precondition,
                    "assemble_document: ocr, asr and rewritten are all empty");
    }
    Document doc;
    doc.doc_id = std::move(doc_id);
    doc.title = std::move(title);
    doc.ocr = std::move(ocr);
    doc.asr = std::move(asr);
    if (rewritten && !rewritten->empty()) {
        doc.body = std::move(*rewritten);
    } else {
        doc.body = doc.ocr.value_or("") + ";" + doc.asr.value_or("");
    }
    return doc;
}

} // namespace ssra
