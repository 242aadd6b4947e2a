// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "json.hpp"

#include "kgsr/error.hpp"
#include "kgsr/metrics.hpp"
#include "kgsr/rng.hpp"

using namespace kgsr;

namespace {

std::vector<EntityId> ids(std::initializer_list<std::uint32_t> values) {
    std::vector<EntityId> out;
    for (auto v : values) out.push_back(EntityId{v});
    return out;
}

// Straight from the definitions, no shared code with the library.
RankingMetrics oracle(const std::vector<EntityId>& ranked, const std::vector<EntityId>& relevant, std::size_t k) {
    const std::set<EntityId> rel(relevant.begin(), relevant.end());
    double dcg = 0.0, idcg = 0.0;
    double hits = 0.0;
    for (std::size_t p = 1; p <= k && p <= ranked.size(); ++p) {
        if (rel.contains(ranked[p - 1])) {
            dcg += 1.0 / std::log2(static_cast<double>(p) + 1.0);
            hits += 1.0;
        }
    }
    for (std::size_t p = 1; p <= std::min(k, rel.size()); ++p) idcg += 1.0 / std::log2(static_cast<double>(p) + 1.0);
    return {dcg / idcg, hits / static_cast<double>(rel.size()), hits > 0 ? 1.0 : 0.0, hits / static_cast<double>(k)};
}

std::vector<EntityId> shuffled_catalog(Rng& rng, std::size_t n) {
    std::vector<EntityId> v;
    for (std::uint32_t i = 0; i < n; ++i) v.push_back(EntityId{i});
    rng.shuffle(std::span<EntityId>(v));
    return v;
}

}  // namespace

TEST_CASE("worked ranking examples") {
    const auto ranked = ids({7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18});
    auto m = evaluate_ranking(ranked, ids({7}), 10);
    CHECK(m.ndcg == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.hit == 1.0);
    CHECK(m.precision == doctest::Approx(0.1));

    m = evaluate_ranking(ranked, ids({9}), 10);
    CHECK(m.ndcg == doctest::Approx(0.5));
    CHECK(m.recall == 1.0);
    CHECK(m.hit == 1.0);
    CHECK(m.precision == doctest::Approx(0.1));

    m = evaluate_ranking(ranked, ids({17, 99}), 10);
    CHECK(m.ndcg == 0.0);
    CHECK(m.recall == 0.0);
    CHECK(m.hit == 0.0);
    CHECK(m.precision == 0.0);
}

TEST_CASE("bad arguments") {
    const auto ranked = ids({1, 2});
    CHECK_THROWS_AS(evaluate_ranking(ranked, {}, 10), ArgumentError);
    CHECK_THROWS_AS(evaluate_ranking(ranked, ids({1}), 0), ArgumentError);
}

TEST_CASE("matches the definitional oracle on random rankings") {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = 1 + rng.below(40);
        const auto ranked = shuffled_catalog(rng, n);
        std::vector<EntityId> relevant;
        const auto r = 1 + rng.below(std::min<std::uint64_t>(n, 8));
        for (std::uint64_t i = 0; i < r; ++i) relevant.push_back(EntityId{static_cast<std::uint32_t>(rng.below(n + 5))});
        std::sort(relevant.begin(), relevant.end());
        relevant.erase(std::unique(relevant.begin(), relevant.end()), relevant.end());
        const auto k = 1 + rng.below(15);
        const auto got = evaluate_ranking(ranked, relevant, k);
        const auto want = oracle(ranked, relevant, k);
        CHECK(std::abs(got.ndcg - want.ndcg) <= 1e-9);
        CHECK(std::abs(got.recall - want.recall) <= 1e-9);
        CHECK(std::abs(got.hit - want.hit) <= 1e-9);
        CHECK(std::abs(got.precision - want.precision) <= 1e-9);
        for (double v : {got.ndcg, got.recall, got.hit, got.precision}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("shuffling below rank K changes nothing") {
    Rng rng(78);
    for (int trial = 0; trial < 100; ++trial) {
        auto ranked = shuffled_catalog(rng, 30);
        const auto relevant = std::vector<EntityId>(ranked.begin() + 5, ranked.begin() + 15);
        const std::size_t k = 1 + rng.below(20);
        const auto before = evaluate_ranking(ranked, relevant, k);
        rng.shuffle(std::span<EntityId>(ranked).subspan(k));
        const auto after = evaluate_ranking(ranked, relevant, k);
        CHECK(before.ndcg == after.ndcg);
        CHECK(before.recall == after.recall);
        CHECK(before.hit == after.hit);
        CHECK(before.precision == after.precision);
    }
}

TEST_CASE("promoting a relevant item never lowers NDCG") {
    Rng rng(79);
    for (int trial = 0; trial < 300; ++trial) {
        auto ranked = shuffled_catalog(rng, 25);
        std::vector<EntityId> relevant;
        for (int i = 0; i < 4; ++i) relevant.push_back(ranked[rng.below(25)]);
        const std::set<EntityId> rel(relevant.begin(), relevant.end());
        const std::size_t k = 1 + rng.below(12);
        const auto before = evaluate_ranking(ranked, relevant, k).ndcg;
        // Pick a relevant item and swap it with a strictly better-ranked irrelevant one.
        std::vector<std::size_t> at;
        for (std::size_t p = 0; p < ranked.size(); ++p)
            if (rel.contains(ranked[p])) at.push_back(p);
        const auto from = at[rng.below(at.size())];
        std::vector<std::size_t> better;
        for (std::size_t p = 0; p < from; ++p)
            if (!rel.contains(ranked[p])) better.push_back(p);
        if (better.empty()) continue;
        std::swap(ranked[from], ranked[better[rng.below(better.size())]]);
        CHECK(evaluate_ranking(ranked, relevant, k).ndcg >= before - 1e-15);
    }
}

TEST_CASE("rank_catalog puts scored items first and drops exclusions") {
    std::vector<CandidateScore> scored(2);
    scored[0].item = EntityId{5};
    scored[0].score = 0.9;
    scored[1].item = EntityId{2};
    scored[1].score = 0.4;
    const auto catalog = ids({1, 2, 3, 4, 5, 6});
    const auto exclude = ids({3});
    CHECK(rank_catalog(scored, catalog, exclude) == ids({5, 2, 1, 4, 6}));
    CHECK(rank_catalog(scored, catalog, ids({5})) == ids({2, 1, 3, 4, 6}));
}

TEST_CASE("a random ranking has HR@10 near K over catalog size") {
    // Null model: with one held-out item among 100, a ranking carrying no
    // information hits with probability 0.1.
    Rng rng(2026);
    const int trials = 1000;
    double hits = 0.0;
    for (int t = 0; t < trials; ++t) {
        const auto ranked = shuffled_catalog(rng, 100);
        const std::vector<EntityId> relevant{EntityId{static_cast<std::uint32_t>(rng.below(100))}};
        hits += evaluate_ranking(ranked, relevant, 10).hit;
    }
    const double mean = hits / trials;
    const double sigma = std::sqrt(0.1 * 0.9 / trials);
    CHECK(std::abs(mean - 0.1) <= 3 * sigma);
}

TEST_CASE("forced ranking: the held-out item is the only candidate") {
    KnowledgeGraph g;
    g.add_triple("u", EntityKind::User, "purchase", "a", EntityKind::Item);
    g.add_triple("a", EntityKind::Item, "has", "p", EntityKind::Property);
    g.add_triple("b", EntityKind::Item, "has", "p", EntityKind::Property);
    g.intern_entity("c", EntityKind::Item);
    g.intern_entity("d", EntityKind::Item);
    InteractionSet train, test;
    train.add(g.entity("u"), g.entity("a"));
    test.add(g.entity("u"), g.entity("b"));
    EmbeddingTable emb(g.entity_count(), g.relation_count(), 3);
    const auto ckpt = make_checkpoint(init_model(emb, 0, 0, 1), g);
    const auto r = evaluate_model(ckpt, g, train, test, 1, DiffusionConfig{});
    CHECK(r.hit_rate == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.ndcg == 1.0);
    CHECK(r.precision == 1.0);
    CHECK(r.users_evaluated == 1);
    CHECK(r.users_skipped == 0);
    CHECK_THROWS_AS(evaluate_model(ckpt, g, train, InteractionSet{}, 10, DiffusionConfig{}), ArgumentError);

    const auto parallel = evaluate_model(ckpt, g, train, test, 1, DiffusionConfig{}, 4);
    CHECK(parallel == r);
}

TEST_CASE("users without candidates are skipped and counted") {
    KnowledgeGraph g;
    g.add_triple("u", EntityKind::User, "purchase", "a", EntityKind::Item);
    g.add_triple("a", EntityKind::Item, "has", "p", EntityKind::Property);
    g.add_triple("b", EntityKind::Item, "has", "p", EntityKind::Property);
    g.intern_entity("loner", EntityKind::User);
    InteractionSet train, test;
    train.add(g.entity("u"), g.entity("a"));
    test.add(g.entity("u"), g.entity("b"));
    test.add(g.entity("loner"), g.entity("b"));
    EmbeddingTable emb(g.entity_count(), g.relation_count(), 2);
    const auto ckpt = make_checkpoint(init_model(emb, 0, 0, 1), g);
    const auto r = evaluate_model(ckpt, g, train, test, 10, DiffusionConfig{});
    CHECK(r.users_evaluated + r.users_skipped == test.user_count());
    CHECK(r.users_skipped == 1);
}

TEST_CASE("report rendering") {
    EvalReport r;
    r.k = 10;
    r.ndcg = 0.25;
    r.recall = 0.5;
    r.hit_rate = 0.75;
    r.precision = 0.05;
    r.users_evaluated = 8;
    r.users_skipped = 2;
    const auto j = nlohmann::json::parse(report_json(r));
    CHECK(j["k"] == 10);
    CHECK(j["ndcg"] == 0.25);
    CHECK(j["recall"] == 0.5);
    CHECK(j["hit_rate"] == 0.75);
    CHECK(j["precision"] == 0.05);
    CHECK(j["users_evaluated"] == 8);
    CHECK(j["users_skipped"] == 2);

    const std::vector<LabeledReport> rows{{"N=60", r}, {"N=100", r}};
    const auto table = report_table(rows, "size");
    CHECK(table.find("size") != std::string::npos);
    CHECK(table.find("N=60") != std::string::npos);
    CHECK(table.find("N=100") != std::string::npos);
    CHECK(std::count(table.begin(), table.end(), '\n') >= 3);
}
