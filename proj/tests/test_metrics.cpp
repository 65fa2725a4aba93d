// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#include <doctest.h>

#include <cmath>

#include "ssra/metrics.hpp"
#include "ssra/util.hpp"
#include "test_support.hpp"

using namespace ssra;
using namespace ssra::metrics;
using test_support::TempDir;

namespace {

// Frequency histograms of the two 30,000-query synthesis pools (baseline SFT
// generator vs the stage-1-enhanced generator): frequency -> #distinct queries.
const std::vector<std::pair<std::size_t, std::size_t>> kSftHistogram = {
    {1, 26475}, {2, 1308}, {3, 164}, {4, 46}, {5, 17}, {6, 10},
    {7, 3},     {8, 2},    {9, 1},   {16, 1}, {26, 1},
};
const std::vector<std::pair<std::size_t, std::size_t>> kStage1Histogram = {
    {1, 27232}, {2, 996}, {3, 145}, {4, 38}, {5, 16}, {6, 8},
    {7, 1},     {8, 2},   {9, 1},   {13, 1}, {16, 1},
};

std::vector<std::string> expand_histogram(
    const std::vector<std::pair<std::size_t, std::size_t>>& histogram) {
    std::vector<std::string> queries;
    std::size_t id = 0;
    for (const auto& [freq, n_distinct] : histogram) {
        for (std::size_t q = 0; q < n_distinct; ++q, ++id) {
            for (std::size_t rep = 0; rep < freq; ++rep) {
                queries.push_back("query-" + std::to_string(id));
            }
        }
    }
    return queries;
}

Qrels qrels_of(const std::map<std::string, std::map<std::string, int>>& judgments) {
    Qrels q;
    q.judgments = judgments;
    return q;
}

} // namespace

TEST_CASE("ndcg perfect ranking scores 1") {
    const Qrels qrels = qrels_of({{"q1", {{"d1", 3}, {"d2", 0}, {"d3", 0}, {"d4", 0}, {"d5", 0}}}});
    const RunRanking run = RunRanking::from_entries({
        {"q1", "d1", 5.0}, {"q1", "d2", 4.0}, {"q1", "d3", 3.0},
        {"q1", "d4", 2.0}, {"q1", "d5", 1.0},
    });
    const NdcgResult result = ndcg_at_k(qrels, run, 10);
    CHECK(result.mean == doctest::Approx(1.0));
}

TEST_CASE("ndcg hand-computed example") {
    // qrels {d1:3, d2:1, d3:0}, ranking [d3, d1, d2], linear gain:
    // DCG = 3/log2(3) + 1/2; IDCG = 3 + 1/log2(3).
    const Qrels qrels = qrels_of({{"q1", {{"d1", 3}, {"d2", 1}, {"d3", 0}}}});
    const RunRanking run = RunRanking::from_entries({
        {"q1", "d3", 0.9}, {"q1", "d1", 0.8}, {"q1", "d2", 0.7},
    });
    const double expected =
        (3.0 / std::log2(3.0) + 0.5) / (3.0 + 1.0 / std::log2(3.0));
    const NdcgResult result = ndcg_at_k(qrels, run, 10);
    CHECK(result.mean == doctest::Approx(expected).epsilon(1e-12));
    CHECK(result.mean == doctest::Approx(0.6590).epsilon(1e-4));
}

TEST_CASE("reversing a perfect ranking strictly lowers ndcg") {
    const Qrels qrels = qrels_of({{"q1", {{"d1", 3}, {"d2", 2}, {"d3", 1}}}});
    const RunRanking best = RunRanking::from_entries(
        {{"q1", "d1", 3.0}, {"q1", "d2", 2.0}, {"q1", "d3", 1.0}});
    const RunRanking worst = RunRanking::from_entries(
        {{"q1", "d1", 1.0}, {"q1", "d2", 2.0}, {"q1", "d3", 3.0}});
    CHECK(ndcg_at_k(qrels, best, 10).mean > ndcg_at_k(qrels, worst, 10).mean);
    CHECK(ndcg_at_k(qrels, best, 10).mean == doctest::Approx(1.0));
}

TEST_CASE("ndcg matches the exhaustive-permutation oracle on random instances") {
    SplitMix64 rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n_docs = 1 + rng.below(8);
        const int k = 1 + static_cast<int>(rng.below(10));
        const bool exponential = rng.below(2) == 1;

        std::map<std::string, int> judged;
        std::vector<std::tuple<std::string, std::string, double>> entries;
        std::vector<int> labels;
        bool any_positive = false;
        for (std::size_t d = 0; d < n_docs; ++d) {
            const int label = static_cast<int>(rng.below(4));
            any_positive |= label > 0;
            judged["d" + std::to_string(d)] = label;
            entries.emplace_back("q", "d" + std::to_string(d), rng.unit());
        }
        if (!any_positive) {
            judged["d0"] = 1;
        }
        const Qrels qrels = qrels_of({{"q", judged}});
        const RunRanking run = RunRanking::from_entries(entries);

        // Oracle: walk the canonical ranking, then divide by the brute-force
        // ideal DCG.
        for (const auto& [doc_id, label] : judged) {
            (void)doc_id;
            labels.push_back(label);
        }
        std::vector<int> ranked_labels;
        for (const auto& [doc_id, score] : run.rankings.at("q")) {
            (void)score;
            ranked_labels.push_back(judged.at(doc_id));
        }
        const double oracle =
            test_support::oracle_dcg(ranked_labels, k, exponential) /
            test_support::oracle_ideal_dcg_bruteforce(labels, k, exponential);

        NdcgOptions options;
        options.gain = exponential ? GainFunction::exponential : GainFunction::linear;
        const NdcgResult result = ndcg_at_k(qrels, run, k, options);
        REQUIRE(result.per_query.size() == 1);
        CHECK(std::abs(result.per_query[0].second - oracle) < 1e-9);
        CHECK(result.mean >= 0.0);
        CHECK(result.mean <= 1.0 + 1e-12);
    }
}

TEST_CASE("ndcg ignores permutations strictly below rank k") {
    const Qrels qrels = qrels_of(
        {{"q1", {{"d1", 3}, {"d2", 2}, {"d3", 1}, {"d4", 1}, {"d5", 0}}}});
    const RunRanking a = RunRanking::from_entries(
        {{"q1", "d1", 9}, {"q1", "d2", 8}, {"q1", "d4", 2}, {"q1", "d5", 1}});
    const RunRanking b = RunRanking::from_entries(
        {{"q1", "d1", 9}, {"q1", "d2", 8}, {"q1", "d5", 2}, {"q1", "d4", 1}});
    CHECK(ndcg_at_k(qrels, a, 2).mean == doctest::Approx(ndcg_at_k(qrels, b, 2).mean));
}

TEST_CASE("ndcg option and error paths") {
    const Qrels qrels = qrels_of({{"q1", {{"d1", 0}, {"d2", 0}}}, {"q2", {{"d1", 2}}}});

    SUBCASE("all-zero queries count as 0 by default") {
        const RunRanking run = RunRanking::from_entries(
            {{"q1", "d1", 1.0}, {"q2", "d1", 1.0}});
        const NdcgResult result = ndcg_at_k(qrels, run, 10);
        CHECK(result.n_all_zero == 1);
        CHECK(result.mean == doctest::Approx(0.5));

        NdcgOptions exclude;
        exclude.exclude_all_zero = true;
        const NdcgResult excluded = ndcg_at_k(qrels, run, 10, exclude);
        CHECK(excluded.n_evaluated == 1);
        CHECK(excluded.mean == doctest::Approx(1.0));
    }
    SUBCASE("unjudged docs gain 0 by default and error in strict mode") {
        const RunRanking run = RunRanking::from_entries(
            {{"q2", "dX", 2.0}, {"q2", "d1", 1.0}});
        const NdcgResult result = ndcg_at_k(qrels, run, 10);
        CHECK(result.mean < 1.0);
        NdcgOptions strict;
        strict.strict_unjudged = true;
        CHECK_THROWS_AS(ndcg_at_k(qrels, run, 10, strict), Error);
    }
    SUBCASE("run query missing from qrels errors") {
        const RunRanking run = RunRanking::from_entries({{"qZ", "d1", 1.0}});
        CHECK_THROWS_AS(ndcg_at_k(qrels, run, 10), Error);
    }
    SUBCASE("duplicate doc in a run is rejected") {
        CHECK_THROWS_AS(
            RunRanking::from_entries({{"q1", "d1", 1.0}, {"q1", "d1", 0.5}}), Error);
    }
}

TEST_CASE("average precision hand-computed example") {
    // scores [.9,.8,.7,.6], labels [3,0,2,0], threshold 2:
    // positives at ranks 1 and 3 -> AP = (1/2)(1/1 + 2/3).
    const std::vector<std::pair<double, int>> pairs = {
        {0.9, 3}, {0.8, 0}, {0.7, 2}, {0.6, 0}};
    const ApResult result = average_precision_at_threshold(pairs, 2);
    CHECK(result.ap == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-12));
    CHECK(result.ap == doctest::Approx(0.8333).epsilon(1e-4));
    CHECK(result.n_positives == 2);
}

TEST_CASE("average precision is 1.0 when every pair is positive") {
    const std::vector<std::pair<double, int>> pairs = {{0.1, 3}, {0.9, 2}, {0.5, 1}};
    CHECK(average_precision_at_threshold(pairs, 1).ap == doctest::Approx(1.0));
}

TEST_CASE("average precision matches the explicit-summation oracle") {
    SplitMix64 rng(1234);
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t n = 1 + rng.below(32);
        std::vector<std::pair<double, int>> pairs;
        // Distinct scores so the ranking is unambiguous.
        for (std::size_t i = 0; i < n; ++i) {
            pairs.emplace_back(static_cast<double>(rng.next() >> 16),
                               static_cast<int>(rng.below(4)));
        }
        const int threshold = 1 + static_cast<int>(rng.below(3));
        bool has_positive = false;
        for (const auto& [score, label] : pairs) {
            (void)score;
            has_positive |= label >= threshold;
        }
        if (!has_positive) {
            pairs[0].second = 3;
        }
        const double oracle = test_support::oracle_average_precision(pairs, threshold);
        const ApResult result = average_precision_at_threshold(pairs, threshold);
        CHECK(std::abs(result.ap - oracle) < 1e-9);
    }
}

TEST_CASE("average precision is invariant under strictly increasing transforms") {
    SplitMix64 rng(77);
    std::vector<std::pair<double, int>> pairs;
    for (int i = 0; i < 20; ++i) {
        pairs.emplace_back(rng.unit() * 10.0, static_cast<int>(rng.below(4)));
    }
    pairs[0].second = 3;
    const double base = average_precision_at_threshold(pairs, 2).ap;
    std::vector<std::pair<double, int>> transformed = pairs;
    for (auto& [score, label] : transformed) {
        (void)label;
        score = std::exp(score / 3.0) + 5.0;
    }
    CHECK(average_precision_at_threshold(transformed, 2).ap == doctest::Approx(base));
}

TEST_CASE("average precision error paths and tie reporting") {
    const std::vector<std::pair<double, int>> no_pos = {{0.5, 0}, {0.4, 1}};
    try {
        average_precision_at_threshold(no_pos, 2);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }

    const std::vector<std::pair<double, int>> tied = {{0.5, 3}, {0.5, 0}, {0.4, 2}};
    CHECK(average_precision_at_threshold(tied, 1).n_tied_scores == 2);
}

TEST_CASE("duplicate rate reproduces both histogram fixtures") {
    const auto sft = expand_histogram(kSftHistogram);
    REQUIRE(sft.size() == 30000);
    const DiversityReport sft_report = duplicate_rate(sft);
    CHECK(sft_report.unique == 28028);
    CHECK(std::abs(percent2(sft_report.duplicate_rate) - 6.57) <= 0.01);

    const auto stage1 = expand_histogram(kStage1Histogram);
    REQUIRE(stage1.size() == 30000);
    const DiversityReport stage1_report = duplicate_rate(stage1);
    CHECK(stage1_report.unique == 28441);
    CHECK(std::abs(percent2(stage1_report.duplicate_rate) - 5.20) <= 0.01);

    const double decrease = relative_decrease_percent(sft_report, stage1_report);
    CHECK(std::abs(decrease - 20.85) <= 0.05);

    // The reconstructed multiset reproduces its own histogram.
    for (const auto& [freq, n_distinct] : kSftHistogram) {
        CHECK(sft_report.histogram.at(freq) == n_distinct);
    }
}

TEST_CASE("duplicate rate basics and identities") {
    CHECK(duplicate_rate({"a", "b", "c"}).duplicate_rate == doctest::Approx(0.0));
    CHECK_THROWS_AS(duplicate_rate({}), Error);

    // Normalization applies before counting.
    const DiversityReport report = duplicate_rate({"Cat  Video", "cat video", "dog"});
    CHECK(report.unique == 2);
    CHECK(report.duplicate_rate == doctest::Approx(1.0 / 3.0));

    SplitMix64 rng(5150);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::string> queries;
        const std::size_t n = 1 + rng.below(200);
        for (std::size_t i = 0; i < n; ++i) {
            queries.push_back("q" + std::to_string(rng.below(40)));
        }
        const DiversityReport r = duplicate_rate(queries);
        std::size_t total = 0;
        std::size_t unique = 0;
        for (const auto& [freq, count] : r.histogram) {
            total += freq * count;
            unique += count;
        }
        CHECK(total == r.total);
        CHECK(unique == r.unique);
        CHECK(r.duplicate_rate ==
              doctest::Approx(static_cast<double>(r.total - r.unique) /
                              static_cast<double>(r.total)));
    }
}

TEST_CASE("consistency rate reproduces the two-stage comparison") {
    // Stage-1-only: 16/40, 16/40, 38/40. Stage-1+2: 26/40, 26/40, 35/40.
    auto build = [](std::array<int, 3> matched) {
        std::vector<std::pair<int, int>> pairs;
        for (int target = 1; target <= 3; ++target) {
            for (int i = 0; i < 40; ++i) {
                const bool match = i < matched[static_cast<std::size_t>(target - 1)];
                pairs.emplace_back(target, match ? target : (target == 1 ? 0 : target - 1));
            }
        }
        return pairs;
    };
    const ConsistencyReport before = consistency_rate(build({16, 16, 38}));
    const ConsistencyReport after = consistency_rate(build({26, 26, 35}));
    CHECK(before.overall.matched == 70);
    CHECK(before.overall.total == 120);
    CHECK(after.overall.matched == 87);
    CHECK(after.overall.total == 120);
    CHECK(std::abs(relative_improvement_percent(before, after) - 24.29) <= 0.05);
}

TEST_CASE("consistency rate basics") {
    const ConsistencyReport all = consistency_rate({{1, 1}, {2, 2}, {3, 3}});
    CHECK(all.overall.rate() == doctest::Approx(1.0));

    // Random fixture against an independent tally.
    SplitMix64 rng(31);
    std::vector<std::pair<int, int>> pairs;
    std::map<int, std::pair<int, int>> tally; // target -> (matched, total)
    for (int i = 0; i < 500; ++i) {
        const int target = 1 + static_cast<int>(rng.below(3));
        const int judged = static_cast<int>(rng.below(4));
        pairs.emplace_back(target, judged);
        tally[target].second += 1;
        if (target == judged) {
            tally[target].first += 1;
        }
    }
    const ConsistencyReport report = consistency_rate(pairs);
    std::size_t overall_matched = 0;
    for (const auto& [target, counts] : tally) {
        CHECK(report.per_target.at(target).matched == static_cast<std::size_t>(counts.first));
        CHECK(report.per_target.at(target).total == static_cast<std::size_t>(counts.second));
        overall_matched += static_cast<std::size_t>(counts.first);
    }
    CHECK(report.overall.matched == overall_matched);
}

TEST_CASE("round_half_even") {
    CHECK(round_half_even(6.573333, 2) == doctest::Approx(6.57));
    CHECK(round_half_even(5.196667, 2) == doctest::Approx(5.20));
    CHECK(round_half_even(2.5, 0) == doctest::Approx(2.0));  // half to even
    CHECK(round_half_even(3.5, 0) == doctest::Approx(4.0));
    CHECK(round_half_even(0.125, 2) == doctest::Approx(0.12));
}

TEST_CASE("qrels and run files load and join") {
    TempDir tmp("metrics-io");
    const auto qrels_path = tmp.path() / "qrels.tsv";
    const auto run_path = tmp.path() / "run.tsv";
    write_file(qrels_path, "q1\td1\t3\nq1\td2\t1\nq2\td1\t0\n");
    write_file(run_path, "q1\td1\t0.9\nq1\td2\t0.8\nq2\td1\t0.7\nq2\tdX\t0.6\n");

    const Qrels qrels = load_qrels(qrels_path);
    CHECK(qrels.judgments.at("q1").at("d1") == 3);

    const RunRanking run = load_run(run_path);
    CHECK(run.rankings.at("q1").front().first == "d1");

    const auto pairs = join_scored_pairs(qrels, run);
    REQUIRE(pairs.size() == 4);
    // Unjudged dX joins as label 0 by default, errors in strict mode.
    CHECK_THROWS_AS(join_scored_pairs(qrels, run, true), Error);

    write_file(qrels_path, "q1\td1\t7\n");
    CHECK_THROWS_AS(load_qrels(qrels_path), Error);
}
