// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ssra/error.hpp"

namespace ssra {

// 4-level graded relevance. 0 = no relevance, 3 = fully satisfies the
// intent; the integers are totally ordered.
class RelevanceLabel {
public:
    static constexpr int kMin = 0;
    static constexpr int kMax = 3;

    explicit RelevanceLabel(int value) : value_(value) {
        if (value < kMin || value > kMax) {
            throw Error(ErrorKind::parse,
                        "label out of range: " + std::to_string(value));
        }
    }

    int value() const { return value_; }

    friend bool operator==(RelevanceLabel a, RelevanceLabel b) { return a.value_ == b.value_; }
    friend bool operator!=(RelevanceLabel a, RelevanceLabel b) { return a.value_ != b.value_; }
    friend bool operator<(RelevanceLabel a, RelevanceLabel b) { return a.value_ < b.value_; }
    friend bool operator>(RelevanceLabel a, RelevanceLabel b) { return a.value_ > b.value_; }

private:
    int value_;
};

struct Query {
    std::string query_id;
    std::string text;
};

// A short-video item in textual form. `body` is either the LLM-rewritten
// description or the "{ocr};{asr}" fallback concatenation.
struct Document {
    std::string doc_id;
    std::string title;
    std::string body;
    std::optional<std::string> ocr;
    std::optional<std::string> asr;
};

enum class Provenance {
    annotated,
    stage1_relabel,
    synthetic_raw,
    synthetic_filtered,
};

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

inline bool is_synthetic(Provenance p) {
    return p == Provenance::synthetic_raw || p == Provenance::synthetic_filtered;
}

// One (query, document, label) training/eval record; the corpus atom.
struct PairRecord {
    Query query;
    std::string doc_id;
    std::optional<RelevanceLabel> label;
    Provenance provenance = Provenance::annotated;
    nlohmann::json meta = nlohmann::json::object();

    // meta.target_label for synthetic records, in {1,2,3}.
    std::optional<int> target_label() const;
    void set_target_label(int label);
};

// One document mapped to its many (query, label) entries.
struct D2QGroup {
    std::string doc_id;
    std::vector<std::pair<Query, RelevanceLabel>> entries;
};

enum class CorpusSchema { labeled, unlabeled };

struct Corpus {
    std::vector<PairRecord> records;

    // Document table, insertion-ordered for stable persistence.
    std::vector<Document> documents;
    std::unordered_map<std::string, std::size_t> doc_index;

    // Rejects a second document with the same id but different content;
    // an identical duplicate is a no-op.
    void add_document(Document doc);
    const Document* find_document(const std::string& doc_id) const;

    bool all_labeled() const;
    std::size_t size() const { return records.size(); }
};

enum class LengthMetric { chars, ws_tokens };

struct CorpusStats {
    std::size_t size = 0;
    // Exact percentages (100 * count / size); rendering rounds to 2 decimals.
    std::array<double, 4> label_percent{};
    std::array<std::size_t, 4> label_count{};
    std::size_t n_queries = 0;
    std::size_t n_docs = 0;
    double avg_query_len = 0.0;
    double avg_doc_len = 0.0;
    std::size_t n_docs_resolved = 0; // docs with text available for length
    LengthMetric length_metric = LengthMetric::chars;

    nlohmann::json to_json() const;
};

// The document text presented to prompts, scoring, and length statistics:
// title and body joined by a single newline.
std::string render_document(const Document& doc);

// --- persistence (JSON Lines, UTF-8, LF) ---------------------------------

Corpus load_corpus(const std::filesystem::path& records_path, CorpusSchema schema);
void save_corpus(const Corpus& corpus, const std::filesystem::path& records_path);

std::vector<Document> load_documents(const std::filesystem::path& path);
void save_documents(const std::vector<Document>& docs, const std::filesystem::path& path);

PairRecord record_from_json(const nlohmann::json& j, CorpusSchema schema);
nlohmann::ordered_json record_to_json(const PairRecord& rec);

// --- operations -----------------------------------------------------------

CorpusStats compute_stats(const Corpus& corpus, LengthMetric metric = LengthMetric::chars);

// Keeps the first record per (normalized query text, label); order preserved.
Corpus dedup_for_query_model(const Corpus& corpus);

// Drops labels 1 and 2, keeping 0 and 3 untouched.
Corpus make_binary_subset(const Corpus& corpus);

// Samples exactly n_per_label records per label without replacement,
// deterministically for a fixed seed. Output keeps corpus order.
Corpus make_balanced_testset(const Corpus& corpus, std::size_t n_per_label, std::uint64_t seed);

// body = rewritten when provided and non-empty, else "{ocr};{asr}" with
// absent fields treated as empty strings. All-empty input is an error.
Document assemble_document(std::string doc_id, std::string title,
                           std::optional<std::string> ocr,
                           std::optional<std::string> asr,
                           std::optional<std::string> rewritten);

} // namespace ssra
