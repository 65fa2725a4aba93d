// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#include <doctest.h>

#include <algorithm>

#include "ssra/mock_clients.hpp"
#include "ssra/stage1.hpp"
#include "ssra/stage2.hpp"
#include "test_support.hpp"

using namespace ssra;
using namespace ssra::modelio;

namespace {

Corpus unlabeled_fixture() {
    // 6 pairs over 2 docs.
    Corpus corpus;
    corpus.add_document({"d1", "title one", "body one", std::nullopt, std::nullopt});
    corpus.add_document({"d2", "title two", "body two", std::nullopt, std::nullopt});
    const std::vector<std::pair<std::string, std::string>> pairs = {
        {"qa", "d1"}, {"qb", "d1"}, {"qc", "d1"}, {"qd", "d2"}, {"qe", "d2"}, {"qf", "d2"},
    };
    int i = 0;
    for (const auto& [text, doc_id] : pairs) {
        PairRecord rec;
        rec.query = {"u" + std::to_string(i++), text};
        rec.doc_id = doc_id;
        corpus.records.push_back(std::move(rec));
    }
    return corpus;
}

mock::TableScoreMock full_table() {
    mock::TableScoreMock table;
    table.set("qa", "d1", 3);
    table.set("qb", "d1", 1);
    table.set("qc", "d1", 0);
    table.set("qd", "d2", 2);
    table.set("qe", "d2", 3);
    table.set("qf", "d2", 0);
    return table;
}

PairRecord labeled_record(const std::string& qid, const std::string& text,
                          const std::string& doc_id, int label) {
    PairRecord rec;
    rec.query = {qid, text};
    rec.doc_id = doc_id;
    rec.label = RelevanceLabel(label);
    return rec;
}

} // namespace

TEST_CASE("relabel scores every pair and groups by document") {
    const Corpus unlabeled = unlabeled_fixture();
    mock::TableScoreMock table = full_table();
    stage1::Stage1Report report;
    const auto relabeled = stage1::relabel(unlabeled, table, {}, report);

    CHECK(report.n_unlabeled_in == 6);
    CHECK(report.n_scored == 6);
    CHECK(report.n_parse_failures == 0);
    REQUIRE(relabeled.size() == 6);
    for (const auto& rec : relabeled) {
        CHECK(rec.provenance == Provenance::stage1_relabel);
        CHECK(rec.label.has_value());
    }
    const auto groups = stage1::group_d2q(relabeled);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].doc_id == "d1");
    CHECK(groups[0].entries.size() == 3);
    CHECK(groups[1].entries.size() == 3);
}

TEST_CASE("relabel reports per-pair failures without dropping them silently") {
    const Corpus unlabeled = unlabeled_fixture();
    mock::TableScoreMock table = full_table();
    table.fail("qc", "d1", ModelErrorKind::score_parse, "unparseable");
    stage1::Stage1Report report;
    const auto relabeled = stage1::relabel(unlabeled, table, {}, report);

    CHECK(relabeled.size() == 5);
    CHECK(report.n_scored == 5);
    CHECK(report.n_parse_failures == 1);
    CHECK(report.n_scored + report.n_parse_failures == report.n_unlabeled_in);
    REQUIRE(report.failure_messages.size() == 1);
    CHECK(report.failure_messages[0].find("u2") != std::string::npos);
}

TEST_CASE("relabel histogram matches an independent recount") {
    // 10,000 pairs over synthetic docs using the heuristic mock.
    SplitMix64 rng(64);
    Corpus unlabeled;
    for (int d = 0; d < 50; ++d) {
        unlabeled.add_document({"d" + std::to_string(d), "title " + std::to_string(d),
                                "cat video number " + std::to_string(d), std::nullopt,
                                std::nullopt});
    }
    const std::vector<std::string> query_pool = {
        "cat video number 7", "cat video", "cat", "dog training", "title 3",
    };
    for (int i = 0; i < 10000; ++i) {
        PairRecord rec;
        rec.query = {"u" + std::to_string(i), query_pool[rng.below(query_pool.size())]};
        rec.doc_id = "d" + std::to_string(rng.below(50));
        unlabeled.records.push_back(std::move(rec));
    }

    mock::HeuristicScoreMock heuristic;
    stage1::Stage1Report report;
    const auto relabeled = stage1::relabel(unlabeled, heuristic, {}, report);

    std::array<std::size_t, 4> recount{};
    for (std::size_t i = 0; i < unlabeled.records.size(); ++i) {
        const Document* doc = unlabeled.find_document(unlabeled.records[i].doc_id);
        recount[static_cast<std::size_t>(
            heuristic.score(unlabeled.records[i].query, *doc).label.value())] += 1;
    }
    CHECK(report.label_histogram == recount);
    CHECK(relabeled.size() == 10000);
}

TEST_CASE("group_d2q dedups queries within a document, first wins") {
    std::vector<PairRecord> pairs = {
        labeled_record("q1", "cat", "d1", 3),
        labeled_record("q2", "dog", "d1", 1),
        labeled_record("q3", "cat", "d2", 2),
        labeled_record("q4", "CAT ", "d1", 2), // duplicate of q1 after normalization
    };
    const auto groups = stage1::group_d2q(pairs);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].doc_id == "d1");
    REQUIRE(groups[0].entries.size() == 2);
    CHECK(groups[0].entries[0].second.value() == 3); // q1 kept over q4
    CHECK(groups[1].doc_id == "d2");

    CHECK(stage1::group_d2q({}).empty());
}

TEST_CASE("group contents are invariant under input permutation") {
    std::vector<PairRecord> pairs;
    SplitMix64 rng(17);
    for (int i = 0; i < 60; ++i) {
        pairs.push_back(labeled_record("q" + std::to_string(i), "text " + std::to_string(i),
                                       "d" + std::to_string(rng.below(8)),
                                       static_cast<int>(rng.below(4))));
    }
    auto collect = [](const std::vector<D2QGroup>& groups) {
        std::map<std::string, std::set<std::string>> contents;
        for (const auto& g : groups) {
            for (const auto& [query, label] : g.entries) {
                contents[g.doc_id].insert(query.text + "#" + std::to_string(label.value()));
            }
        }
        return contents;
    };
    std::vector<PairRecord> shuffled = pairs;
    for (std::size_t i = shuffled.size(); i > 1; --i) {
        std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
    }
    CHECK(collect(stage1::group_d2q(pairs)) == collect(stage1::group_d2q(shuffled)));
}

TEST_CASE("merge_stage1 policies") {
    SUBCASE("disjoint sets concatenate") {
        Corpus labeled;
        std::vector<PairRecord> relabeled;
        for (int i = 0; i < 10; ++i) {
            labeled.records.push_back(
                labeled_record("a" + std::to_string(i), "la" + std::to_string(i), "d1", 3));
            PairRecord rec = labeled_record("b" + std::to_string(i), "lb" + std::to_string(i),
                                            "d2", 1);
            rec.provenance = Provenance::stage1_relabel;
            relabeled.push_back(std::move(rec));
        }
        const Corpus merged = stage1::merge_stage1(relabeled, labeled);
        CHECK(merged.size() == 20);
    }
    SUBCASE("annotated record wins a (query,doc) collision") {
        Corpus labeled;
        for (int i = 0; i < 10; ++i) {
            labeled.records.push_back(
                labeled_record("a" + std::to_string(i), "q" + std::to_string(i), "d1", 3));
        }
        std::vector<PairRecord> relabeled;
        for (int i = 0; i < 10; ++i) {
            PairRecord rec = labeled_record("b" + std::to_string(i),
                                            i == 0 ? "q0" : "r" + std::to_string(i), "d1",
                                            1); // r0 collides with q0 on (text, d1)
            rec.provenance = Provenance::stage1_relabel;
            relabeled.push_back(std::move(rec));
        }
        const Corpus merged = stage1::merge_stage1(relabeled, labeled);
        CHECK(merged.size() == 19);
        // The annotated label-3 record survived.
        const auto it = std::find_if(merged.records.begin(), merged.records.end(),
                                     [](const PairRecord& r) {
                                         return r.query.text == "q0" && r.doc_id == "d1";
                                     });
        REQUIRE(it != merged.records.end());
        CHECK(it->label->value() == 3);
        CHECK(it->provenance == Provenance::annotated);
    }
    SUBCASE("empty relabeled set is the identity") {
        Corpus labeled;
        labeled.records.push_back(labeled_record("a", "q", "d1", 2));
        const Corpus merged = stage1::merge_stage1({}, labeled);
        CHECK(test_support::corpora_equal(merged, labeled));
    }
    SUBCASE("no (query,doc) key appears twice and annotated records all survive") {
        const Corpus labeled = dedup_for_query_model(test_support::random_labeled_corpus(3, 200));
        std::vector<PairRecord> relabeled;
        SplitMix64 rng(4);
        for (int i = 0; i < 150; ++i) {
            PairRecord rec = labeled_record(
                "r" + std::to_string(i), test_support::random_text(rng),
                "d" + std::to_string(rng.below(60)), static_cast<int>(rng.below(4)));
            rec.provenance = Provenance::stage1_relabel;
            relabeled.push_back(std::move(rec));
        }
        const Corpus merged = stage1::merge_stage1(relabeled, labeled);
        std::set<std::pair<std::string, std::string>> keys;
        for (const auto& rec : merged.records) {
            const auto key = std::make_pair(ssra::text::normalize(rec.query.text), rec.doc_id);
            CHECK(keys.insert(key).second);
        }
        CHECK(merged.size() >= labeled.size());
    }
}

TEST_CASE("stage1 label-0 retention is configurable") {
    const Corpus unlabeled = unlabeled_fixture();
    mock::TableScoreMock table = full_table(); // two label-0 pairs
    Corpus empty_labeled;

    stage1::Stage1Options keep;
    const auto with_zeros = stage1::run_stage1(unlabeled, empty_labeled, table, keep);
    CHECK(with_zeros.merged.size() == 6);

    stage1::Stage1Options drop;
    drop.include_label0 = false;
    mock::TableScoreMock table2 = full_table();
    const auto without_zeros = stage1::run_stage1(unlabeled, empty_labeled, table2, drop);
    CHECK(without_zeros.merged.size() == 4);
    CHECK(without_zeros.report.n_label0_excluded == 2);
}

TEST_CASE("d2q groups round-trip through JSONL") {
    test_support::TempDir tmp("d2q");
    const std::vector<PairRecord> pairs = {
        labeled_record("q1", "cat", "d1", 3),
        labeled_record("q2", "dog", "d1", 1),
        labeled_record("q3", "bird", "d2", 2),
    };
    const auto groups = stage1::group_d2q(pairs);
    const auto path = tmp.path() / "d2q.jsonl";
    stage1::save_d2q(groups, path);
    const auto reloaded = stage1::load_d2q(path);
    REQUIRE(reloaded.size() == 2);
    CHECK(reloaded[0].entries.size() == 2);
    CHECK(reloaded[0].entries[1].first.text == "dog");
    CHECK(reloaded[0].entries[1].second.value() == 1);
}

// --- stage 2 ---------------------------------------------------------------------

namespace {

Corpus docs_fixture(int n_docs) {
    Corpus docs;
    for (int i = 0; i < n_docs; ++i) {
        docs.add_document({"d" + std::to_string(i), "title " + std::to_string(i),
                           "body " + std::to_string(i), std::nullopt, std::nullopt});
    }
    return docs;
}

stage2::SynthesisPlan plan_over(const Corpus& docs, std::vector<int> labels, int per = 1) {
    stage2::SynthesisPlan plan;
    for (const auto& doc : docs.documents) {
        plan.doc_ids.push_back(doc.doc_id);
    }
    for (int v : labels) {
        plan.target_labels.push_back(RelevanceLabel(v));
    }
    plan.per_doc_per_label = per;
    return plan;
}

} // namespace

TEST_CASE("synthesize produces one record per slot with target metadata") {
    const Corpus docs = docs_fixture(2);
    mock::TemplateQueryMock gen(0);
    const auto result = stage2::synthesize(plan_over(docs, {1, 2, 3}), docs, gen, 4);
    REQUIRE(result.synthetic.size() == 6);
    CHECK(result.failures.empty());
    for (const auto& rec : result.synthetic.records) {
        CHECK(rec.provenance == Provenance::synthetic_raw);
        CHECK(rec.target_label() == rec.label->value());
        CHECK(rec.query.query_id.rfind("syn-", 0) == 0);
    }
    // Same plan and seed reproduce the same corpus.
    mock::TemplateQueryMock gen2(0);
    const auto again = stage2::synthesize(plan_over(docs, {1, 2, 3}), docs, gen2, 4);
    CHECK(test_support::corpora_equal(result.synthetic, again.synthetic));
}

TEST_CASE("synthesize validates its plan") {
    const Corpus docs = docs_fixture(1);
    mock::TemplateQueryMock gen(0);
    stage2::SynthesisPlan empty_labels = plan_over(docs, {});
    CHECK_THROWS_AS(stage2::synthesize(empty_labels, docs, gen, 1), Error);
    stage2::SynthesisPlan zero_target = plan_over(docs, {0, 1});
    CHECK_THROWS_AS(stage2::synthesize(zero_target, docs, gen, 1), Error);
    stage2::SynthesisPlan unknown_doc = plan_over(docs, {1});
    unknown_doc.doc_ids.push_back("missing");
    CHECK_THROWS_AS(stage2::synthesize(unknown_doc, docs, gen, 1), Error);
}

TEST_CASE("filter_by_score keeps exactly the matching records") {
    SUBCASE("identity scorer keeps everything and is idempotent") {
        const Corpus docs = docs_fixture(4);
        mock::TemplateQueryMock gen(0);
        const auto synth = stage2::synthesize(plan_over(docs, {1, 2, 3}), docs, gen, 4);
        mock::PatternScoreMock scorer;
        const auto filtered = stage2::filter_by_score(synth.synthetic, scorer, 4);
        CHECK(filtered.kept.size() == 12);
        CHECK(filtered.decisions.size() == 12);
        for (const auto& rec : filtered.kept.records) {
            CHECK(rec.provenance == Provenance::synthetic_filtered);
            CHECK(rec.target_label() == rec.label->value());
        }
        const auto again = stage2::filter_by_score(filtered.kept, scorer, 4);
        CHECK(again.kept.size() == filtered.kept.size());
    }
    SUBCASE("scorer predicting 3 over uniform targets keeps a third") {
        // 30 records, targets uniform over {1,2,3}, table scorer answers 3.
        Corpus synthetic = docs_fixture(10);
        mock::TableScoreMock scorer;
        int i = 0;
        for (const auto& doc : synthetic.documents) {
            for (int target = 1; target <= 3; ++target) {
                PairRecord rec = labeled_record("s" + std::to_string(i),
                                                "syn query " + std::to_string(i++),
                                                doc.doc_id, target);
                rec.provenance = Provenance::synthetic_raw;
                rec.set_target_label(target);
                scorer.set(rec.query.text, rec.doc_id, 3);
                synthetic.records.push_back(std::move(rec));
            }
        }
        const auto filtered = stage2::filter_by_score(synthetic, scorer, 4);
        CHECK(filtered.kept.size() == 10);
        std::size_t mismatches = 0;
        for (const auto& d : filtered.decisions) {
            mismatches += d.verdict == stage2::FilterVerdict::dropped_score_mismatch ? 1 : 0;
        }
        CHECK(mismatches == 20);
    }
    SUBCASE("empty input yields empty output and no decisions") {
        Corpus empty;
        mock::PatternScoreMock scorer;
        const auto filtered = stage2::filter_by_score(empty, scorer, 2);
        CHECK(filtered.kept.size() == 0);
        CHECK(filtered.decisions.empty());
    }
    SUBCASE("scoring failure drops the record with its error recorded") {
        Corpus synthetic = docs_fixture(1);
        PairRecord rec = labeled_record("s0", "mock-q(d0,2)", "d0", 2);
        rec.provenance = Provenance::synthetic_raw;
        rec.set_target_label(2);
        synthetic.records.push_back(rec);
        mock::PatternScoreMock scorer;
        scorer.override_failure("mock-q(d0,2)", "d0", ModelErrorKind::score_parse, "boom");
        const auto filtered = stage2::filter_by_score(synthetic, scorer, 1);
        CHECK(filtered.kept.size() == 0);
        REQUIRE(filtered.decisions.size() == 1);
        CHECK(filtered.decisions[0].verdict == stage2::FilterVerdict::dropped_score_mismatch);
        REQUIRE(filtered.decisions[0].error.has_value());
    }
}

namespace {

Corpus kept_fixture_one_doc() {
    // One document with filtered synthetic queries at labels 1, 2, 3.
    Corpus corpus = docs_fixture(1);
    for (int label = 1; label <= 3; ++label) {
        PairRecord rec = labeled_record("s" + std::to_string(label),
                                        "mock-q(d0," + std::to_string(label) + ")", "d0",
                                        label);
        rec.provenance = Provenance::synthetic_filtered;
        rec.set_target_label(label);
        corpus.records.push_back(std::move(rec));
    }
    return corpus;
}

} // namespace

TEST_CASE("filter_pairwise keeps consistent documents intact") {
    const Corpus kept = kept_fixture_one_doc();
    mock::RelevanceJudgeMock judge(0); // embedded targets give the true order
    const auto result = stage2::filter_pairwise(kept, judge, 2);
    CHECK(result.refined.size() == 3);
    CHECK(result.judgments.size() == 3); // pairs (1,2), (1,3), (2,3)
    for (const auto& j : result.judgments) {
        CHECK_FALSE(j.inconsistent);
        CHECK(j.label_a < j.label_b); // canonical presentation, lower label as A
    }
}

TEST_CASE("filter_pairwise drops both members of an inverted pair only") {
    const Corpus kept = kept_fixture_one_doc();
    mock::RelevanceJudgeMock judge(0);
    // Invert only the (1,3) comparison; (1,2) and (2,3) stay truthful.
    judge.set_verdict("d0", "mock-q(d0,1)", "mock-q(d0,3)",
                      OrderVerdict::a_more_relevant);
    const auto result = stage2::filter_pairwise(kept, judge, 1);
    REQUIRE(result.refined.size() == 1);
    CHECK(result.refined.records[0].label->value() == 2);

    std::size_t dropped = 0;
    for (const auto& d : result.decisions) {
        if (d.verdict == stage2::FilterVerdict::dropped_pairwise_inconsistent) {
            ++dropped;
            CHECK(d.counterpart_query_id.has_value());
        }
    }
    CHECK(dropped == 2);
}

TEST_CASE("filter_pairwise treats ties as consistent") {
    Corpus kept = kept_fixture_one_doc();
    mock::RelevanceJudgeMock judge(0);
    judge.set_verdict("d0", "mock-q(d0,1)", "mock-q(d0,2)", OrderVerdict::tie);
    const auto result = stage2::filter_pairwise(kept, judge, 1);
    CHECK(result.refined.size() == 3);
}

TEST_CASE("filter_pairwise judge failure is conservative") {
    Corpus kept = kept_fixture_one_doc();
    mock::RelevanceJudgeMock judge(0);
    judge.fail_pair("d0", "mock-q(d0,1)", "mock-q(d0,2)", "cannot judge");
    const auto result = stage2::filter_pairwise(kept, judge, 1);
    CHECK(result.refined.size() == 1); // labels 1 and 2 dropped
    CHECK(result.refined.records[0].label->value() == 3);
    std::size_t errored = 0;
    for (const auto& j : result.judgments) {
        errored += j.error.has_value() ? 1 : 0;
    }
    CHECK(errored == 1);
}

TEST_CASE("filter_pairwise leaves single-query documents alone") {
    Corpus kept = docs_fixture(1);
    PairRecord rec = labeled_record("s1", "mock-q(d0,2)", "d0", 2);
    rec.provenance = Provenance::synthetic_filtered;
    rec.set_target_label(2);
    kept.records.push_back(rec);
    mock::RelevanceJudgeMock judge(0);
    const auto result = stage2::filter_pairwise(kept, judge, 1);
    CHECK(result.refined.size() == 1);
    CHECK(result.judgments.empty());
}

TEST_CASE("filter_pairwise judges every discordant pair") {
    // k queries with differing labels per doc: judged pairs = label-discordant
    // unordered pairs, verifiable from the judgment log.
    SplitMix64 rng(12);
    Corpus kept = docs_fixture(5);
    std::map<std::string, std::vector<int>> labels_per_doc;
    int i = 0;
    for (const auto& doc : kept.documents) {
        const std::size_t k = 1 + rng.below(5);
        for (std::size_t q = 0; q < k; ++q) {
            const int label = 1 + static_cast<int>(rng.below(3));
            PairRecord rec = labeled_record(
                "s" + std::to_string(i), "syn " + std::to_string(i), doc.doc_id, label);
            ++i;
            rec.provenance = Provenance::synthetic_filtered;
            rec.set_target_label(label);
            kept.records.push_back(std::move(rec));
            labels_per_doc[doc.doc_id].push_back(label);
        }
    }
    mock::RelevanceJudgeMock judge(3);
    const auto result = stage2::filter_pairwise(kept, judge, 4);

    std::size_t expected_pairs = 0;
    for (const auto& [doc_id, labels] : labels_per_doc) {
        (void)doc_id;
        for (std::size_t a = 0; a < labels.size(); ++a) {
            for (std::size_t b = a + 1; b < labels.size(); ++b) {
                expected_pairs += labels[a] != labels[b] ? 1 : 0;
            }
        }
    }
    CHECK(result.judgments.size() == expected_pairs);
    CHECK(result.refined.size() <= kept.size());
}

TEST_CASE("assemble_enriched prefers non-synthetic records") {
    Corpus stage1_corpus;
    stage1_corpus.records.push_back(labeled_record("a1", "shared query", "d0", 3));
    stage1_corpus.records.push_back(labeled_record("a2", "other query", "d1", 1));

    Corpus refined = docs_fixture(1);
    PairRecord synthetic = labeled_record("s1", "shared query", "d0", 2);
    synthetic.provenance = Provenance::synthetic_filtered;
    synthetic.set_target_label(2);
    refined.records.push_back(synthetic);
    PairRecord fresh = labeled_record("s2", "new query", "d0", 1);
    fresh.provenance = Provenance::synthetic_filtered;
    fresh.set_target_label(1);
    refined.records.push_back(fresh);

    const Corpus enriched = stage2::assemble_enriched(refined, stage1_corpus);
    CHECK(enriched.size() == 3); // collision resolved in favor of the annotated record
    const auto it = std::find_if(enriched.records.begin(), enriched.records.end(),
                                 [](const PairRecord& r) {
                                     return r.query.text == "shared query";
                                 });
    REQUIRE(it != enriched.records.end());
    CHECK(it->provenance == Provenance::annotated);
    CHECK(it->label->value() == 3);

    SUBCASE("disjoint corpora concatenate") {
        Corpus big_stage1;
        for (int i = 0; i < 100; ++i) {
            big_stage1.records.push_back(
                labeled_record("a" + std::to_string(i), "la" + std::to_string(i), "dX", 3));
        }
        Corpus big_refined;
        for (int i = 0; i < 50; ++i) {
            PairRecord rec = labeled_record("s" + std::to_string(i),
                                            "ls" + std::to_string(i), "dY", 2);
            rec.provenance = Provenance::synthetic_filtered;
            rec.set_target_label(2);
            big_refined.records.push_back(std::move(rec));
        }
        CHECK(stage2::assemble_enriched(big_refined, big_stage1).size() == 150);
    }
    SUBCASE("empty synthetic set leaves stage1 unchanged") {
        const Corpus enriched2 = stage2::assemble_enriched(Corpus{}, stage1_corpus);
        CHECK(test_support::corpora_equal(enriched2, stage1_corpus));
    }
}

TEST_CASE("stage2 end to end is a pure function of plan and seeds") {
    auto run_once = [](std::uint64_t seed) {
        const Corpus docs = docs_fixture(6);
        mock::TemplateQueryMock gen(seed);
        const auto synth = stage2::synthesize(plan_over(docs, {1, 2, 3}), docs, gen, 8);
        mock::PatternScoreMock scorer;
        scorer.override_label("mock-q(d2,1)", "d2", 0); // one planted mismatch
        const auto scored = stage2::filter_by_score(synth.synthetic, scorer, 8);
        mock::RelevanceJudgeMock judge(seed);
        judge.set_verdict("d3", "mock-q(d3,1)", "mock-q(d3,3)",
                          OrderVerdict::a_more_relevant);
        const auto refined = stage2::filter_pairwise(scored.kept, judge, 8);
        Corpus stage1_corpus;
        stage1_corpus.records.push_back(labeled_record("a1", "seed query", "d0", 3));
        return stage2::assemble_enriched(refined.refined, stage1_corpus);
    };
    const Corpus a = run_once(5);
    const Corpus b = run_once(5);
    CHECK(test_support::corpora_equal(a, b));
    CHECK(a.size() == 1 + (18 - 1) - 2); // stage1 + (slots - mismatch) - inverted pair
}
