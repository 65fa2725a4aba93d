// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#include "ssra/metrics.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "ssra/error.hpp"
#include "ssra/text.hpp"
#include "ssra/util.hpp"

namespace ssra::metrics {

namespace {

double gain_of(int label, GainFunction gain) {
    return gain == GainFunction::linear
               ? static_cast<double>(label)
               : std::exp2(static_cast<double>(label)) - 1.0;
}

double discount(std::size_t rank_1based) {
    return 1.0 / std::log2(static_cast<double>(rank_1based) + 1.0);
}

} // namespace

RunRanking RunRanking::from_entries(
    const std::vector<std::tuple<std::string, std::string, double>>& entries) {
    RunRanking run;
    for (const auto& [qid, did, score] : entries) {
        run.rankings[qid].emplace_back(did, score);
    }
    for (auto& [qid, ranking] : run.rankings) {
        std::sort(ranking.begin(), ranking.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        for (std::size_t i = 1; i < ranking.size(); ++i) {
            if (ranking[i].first == ranking[i - 1].first) {
                throw Error(ErrorKind::parse,
                            "duplicate doc_id in run for query " + qid + ": " + ranking[i].first);
            }
        }
    }
    return run;
}

NdcgResult ndcg_at_k(const Qrels& qrels, const RunRanking& run, int k,
                     const NdcgOptions& options) {
    if (k < 1) {
        throw Error(ErrorKind::precondition, "ndcg_at_k requires k >= 1");
    }
    NdcgResult result;
    double sum = 0.0;
    for (const auto& [qid, ranking] : run.rankings) {
        auto judged_it = qrels.judgments.find(qid);
        if (judged_it == qrels.judgments.end()) {
            throw Error(ErrorKind::precondition, "run query absent from qrels: " + qid);
        }
        const auto& judged = judged_it->second;
        if (judged.empty()) {
            throw Error(ErrorKind::precondition, "no judged docs for query: " + qid);
        }

        double dcg = 0.0;
        const std::size_t depth = std::min<std::size_t>(ranking.size(), static_cast<std::size_t>(k));
        for (std::size_t i = 0; i < depth; ++i) {
            const auto& [doc_id, score] = ranking[i];
            (void)score;
            auto it = judged.find(doc_id);
            if (it == judged.end()) {
                if (options.strict_unjudged) {
                    throw Error(ErrorKind::precondition,
                                "unjudged doc in run for query " + qid + ": " + doc_id);
                }
                continue; // unjudged -> gain 0
            }
            dcg += gain_of(it->second, options.gain) * discount(i + 1);
        }

        // Ideal DCG over all judged docs, labels descending.
        std::vector<int> labels;
        labels.reserve(judged.size());
        for (const auto& [doc_id, label] : judged) {
            (void)doc_id;
            labels.push_back(label);
        }
        std::sort(labels.rbegin(), labels.rend());
        double idcg = 0.0;
        const std::size_t ideal_depth = std::min<std::size_t>(labels.size(), static_cast<std::size_t>(k));
        for (std::size_t i = 0; i < ideal_depth; ++i) {
            idcg += gain_of(labels[i], options.gain) * discount(i + 1);
        }

        if (idcg == 0.0) {
            ++result.n_all_zero;
            if (options.exclude_all_zero) {
                continue;
            }
            result.per_query.emplace_back(qid, 0.0);
            continue;
        }
        const double value = dcg / idcg;
        result.per_query.emplace_back(qid, value);
        sum += value;
    }
    result.n_evaluated = result.per_query.size();
    result.mean = result.n_evaluated == 0 ? 0.0 : sum / static_cast<double>(result.n_evaluated);
    return result;
}

nlohmann::json NdcgResult::to_json(int k) const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["metric"] = "ndcg";
    j["k"] = k;
    j["mean"] = mean;
    j["n_evaluated"] = n_evaluated;
    j["n_all_zero"] = n_all_zero;
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [qid, value] : per_query) {
        per[qid] = value;
    }
    j["per_query"] = per;
    return j;
}

ApResult average_precision_at_threshold(
    const std::vector<std::pair<double, int>>& scored_pairs, int threshold) {
    if (threshold < 1 || threshold > 3) {
        throw Error(ErrorKind::precondition, "AP threshold must be in {1,2,3}");
    }
    ApResult result;
    result.n_pairs = scored_pairs.size();

    std::vector<std::pair<double, int>> ranked = scored_pairs;
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    std::size_t positives = 0;
    for (const auto& [score, label] : ranked) {
        (void)score;
        if (label < 0 || label > 3) {
            throw Error(ErrorKind::precondition, "label out of range in scored pairs");
        }
        if (label >= threshold) {
            ++positives;
        }
    }
    if (positives == 0) {
        throw Error(ErrorKind::precondition,
                    "no positive pairs at threshold >= " + std::to_string(threshold));
    }
    result.n_positives = positives;

    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const bool tied_prev = i > 0 && ranked[i].first == ranked[i - 1].first;
        const bool tied_next = i + 1 < ranked.size() && ranked[i].first == ranked[i + 1].first;
        if (tied_prev || tied_next) {
            ++result.n_tied_scores;
        }
    }

    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (ranked[i].second >= threshold) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    result.ap = sum / static_cast<double>(positives);
    return result;
}

nlohmann::json ApResult::to_json(int threshold) const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["metric"] = "average_precision";
    j["threshold"] = threshold;
    j["ap"] = ap;
    j["n_pairs"] = n_pairs;
    j["n_positives"] = n_positives;
    j["n_tied_scores"] = n_tied_scores;
    return j;
}

DiversityReport duplicate_rate(const std::vector<std::string>& queries) {
    if (queries.empty()) {
        throw Error(ErrorKind::precondition, "duplicate_rate requires a non-empty query list");
    }
    std::unordered_map<std::string, std::size_t> counts;
    counts.reserve(queries.size());
    for (const std::string& q : queries) {
        counts[text::normalize(q)] += 1;
    }
    DiversityReport report;
    report.total = queries.size();
    report.unique = counts.size();
    report.duplicate_rate =
        static_cast<double>(report.total - report.unique) / static_cast<double>(report.total);
    for (const auto& [key, freq] : counts) {
        (void)key;
        report.histogram[freq] += 1;
    }
    return report;
}

nlohmann::json DiversityReport::to_json() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["metric"] = "duplicate_rate";
    j["total"] = total;
    j["unique"] = unique;
    j["duplicate_rate"] = duplicate_rate;
    j["duplicate_rate_pct"] = percent2(duplicate_rate);
    nlohmann::json hist = nlohmann::json::object();
    for (const auto& [freq, n] : histogram) {
        hist[std::to_string(freq)] = n;
    }
    j["histogram"] = hist;
    return j;
}

ConsistencyReport consistency_rate(const std::vector<std::pair<int, int>>& target_judged) {
    ConsistencyReport report;
    for (const auto& [target, judged] : target_judged) {
        if (target < 0 || target > 3 || judged < 0 || judged > 3) {
            throw Error(ErrorKind::precondition, "label out of range in consistency input");
        }
        auto& row = report.per_target[target];
        row.total += 1;
        report.overall.total += 1;
        if (target == judged) {
            row.matched += 1;
            report.overall.matched += 1;
        }
    }
    return report;
}

nlohmann::json ConsistencyReport::to_json() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["metric"] = "consistency_rate";
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [target, row] : per_target) {
        per[std::to_string(target)] = {
            {"matched", row.matched}, {"total", row.total}, {"rate", row.rate()}};
    }
    j["per_target"] = per;
    j["overall"] = {{"matched", overall.matched},
                    {"total", overall.total},
                    {"rate", overall.rate()}};
    j["overall_rate_pct"] = percent2(overall.rate());
    return j;
}

double relative_improvement_percent(const ConsistencyReport& before,
                                    const ConsistencyReport& after) {
    const double r1 = before.overall.rate();
    const double r2 = after.overall.rate();
    if (r1 == 0.0) {
        throw Error(ErrorKind::precondition, "baseline consistency rate is zero");
    }
    return round_half_even(100.0 * (r2 - r1) / r1, 2);
}

double relative_decrease_percent(const DiversityReport& before,
                                 const DiversityReport& after) {
    const double p1 = percent2(before.duplicate_rate);
    const double p2 = percent2(after.duplicate_rate);
    if (p1 == 0.0) {
        throw Error(ErrorKind::precondition, "baseline duplicate rate is zero");
    }
    return round_half_even(100.0 * (p1 - p2) / p1, 2);
}

double round_half_even(double value, int decimals) {
    double scale = 1.0;
    for (int i = 0; i < decimals; ++i) {
        scale *= 10.0;
    }
    // nearbyint under FE_TONEAREST rounds halves to even.
    const int prev = std::fegetround();
    std::fesetround(FE_TONEAREST);
    const double rounded = std::nearbyint(value * scale) / scale;
    std::fesetround(prev);
    return rounded;
}

// --- file formats -----------------------------------------------------------

namespace {

std::vector<std::string> split_tsv(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

} // namespace

Qrels load_qrels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open qrels file: " + path.string());
    }
    Qrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_tsv(line);
        if (fields.size() != 3) {
            throw Error(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) +
                                              ": expected query_id<TAB>doc_id<TAB>label");
        }
        int label = 0;
        try {
            label = std::stoi(fields[2]);
        } catch (const std::exception&) {
            throw Error(ErrorKind::parse,
                        path.string() + ":" + std::to_string(line_no) + ": bad label");
        }
        if (label < 0 || label > 3) {
            throw Error(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) +
                                              ": label out of range: " + fields[2]);
        }
        qrels.judgments[fields[0]][fields[1]] = label;
    }
    return qrels;
}

RunRanking load_run(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open run file: " + path.string());
    }
    std::vector<std::tuple<std::string, std::string, double>> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_tsv(line);
        if (fields.size() != 3) {
            throw Error(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) +
                                              ": expected query_id<TAB>doc_id<TAB>score");
        }
        double score = 0.0;
        try {
            score = std::stod(fields[2]);
        } catch (const std::exception&) {
            throw Error(ErrorKind::parse,
                        path.string() + ":" + std::to_string(line_no) + ": bad score");
        }
        entries.emplace_back(fields[0], fields[1], score);
    }
    return RunRanking::from_entries(entries);
}

std::vector<std::pair<double, int>> join_scored_pairs(const Qrels& qrels,
                                                      const RunRanking& run,
                                                      bool strict_unjudged) {
    std::vector<std::pair<double, int>> pairs;
    for (const auto& [qid, ranking] : run.rankings) {
        auto judged_it = qrels.judgments.find(qid);
        if (judged_it == qrels.judgments.end()) {
            throw Error(ErrorKind::precondition, "run query absent from qrels: " + qid);
        }
        for (const auto& [doc_id, score] : ranking) {
            auto it = judged_it->second.find(doc_id);
            if (it == judged_it->second.end()) {
                if (strict_unjudged) {
                    throw Error(ErrorKind::precondition,
                                "unjudged doc in run for query " + qid + ": " + doc_id);
                }
                pairs.emplace_back(score, 0);
            } else {
                pairs.emplace_back(score, it->second);
            }
        }
    }
    return pairs;
}

} // namespace ssra::metrics
