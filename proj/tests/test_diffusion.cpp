// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"

#include "kgsr/diffusion.hpp"
#include "kgsr/error.hpp"
#include "support/random_instance.hpp"

using namespace kgsr;

namespace {

double sum(const Vector& v) { return std::accumulate(v.begin(), v.end(), 0.0); }
double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Frontier manual_frontier(Vector central_scores, std::vector<std::pair<std::size_t, std::size_t>> edges,
                         std::size_t candidates) {
    Frontier f;
    for (std::size_t i = 0; i < central_scores.size(); ++i) f.centrals.push_back(EntityId{static_cast<std::uint32_t>(i)});
    f.central_scores = std::move(central_scores);
    for (std::size_t c = 0; c < candidates; ++c)
        f.candidates.push_back(EntityId{static_cast<std::uint32_t>(100 + c)});
    for (auto [src, dst] : edges)
        f.edges.push_back({src, dst, {f.centrals[src], RelationId{0}, Direction::Forward, f.candidates[dst]}});
    return f;
}

AttentionParams zero_params(std::size_t d, std::size_t hidden) { return {Matrix(hidden, 2 * d), Matrix(d, hidden)}; }

// user u -r-> c, and c -r-> each of `tails`; returns the frontier out of c.
struct CentralFixture {
    KnowledgeGraph graph;
    EmbeddingTable embeddings;
    Frontier frontier;
};

CentralFixture central_fixture(const std::vector<Vector>& tails, const Vector& h_u, const Vector& h_c) {
    CentralFixture f;
    const auto u = f.graph.intern_entity("u", EntityKind::User);
    const auto c = f.graph.intern_entity("c", EntityKind::Item);
    const auto r = f.graph.intern_relation("r");
    f.graph.add_triple(Triple{u, r, c});
    std::vector<EntityId> ids;
    for (std::size_t i = 0; i < tails.size(); ++i) {
        ids.push_back(f.graph.intern_entity("t" + std::to_string(i), EntityKind::Property));
        f.graph.add_triple(Triple{c, r, ids.back()});
    }
    f.embeddings = EmbeddingTable(f.graph.entity_count(), 1, h_u.size());
    std::copy(h_u.begin(), h_u.end(), f.embeddings.entity(u).begin());
    std::copy(h_c.begin(), h_c.end(), f.embeddings.entity(c).begin());
    for (std::size_t i = 0; i < tails.size(); ++i)
        std::copy(tails[i].begin(), tails[i].end(), f.embeddings.entity(ids[i]).begin());
    const EntityId centrals[] = {c};
    const double scores[] = {1.0};
    f.frontier = build_frontier(f.graph, centrals, scores, [&](EntityId e) { return e == u || e == c; });
    return f;
}

}  // namespace

TEST_CASE("edge attention: a single edge gets all the mass") {
    Rng rng(1);
    auto f = central_fixture({{0.3, -0.2}}, {1, 0}, {0, 1});
    AttentionParams p{Matrix(3, 4), Matrix(2, 3)};
    testing::fill_uniform(p.w1, rng, 2.0);
    testing::fill_uniform(p.w2, rng, 2.0);
    const auto att = compute_edge_attention(p, f.embeddings.entity(EntityId{0}), f.frontier, f.embeddings, 0.01);
    REQUIRE(att.alpha.size() == 1);
    CHECK(att.alpha[0] == 1.0);
}

TEST_CASE("edge attention: zero weights give sigmoid(0) everywhere") {
    auto f = central_fixture({{1, 2}, {-3, 4}}, {1, 0}, {0, 1});
    const auto att =
        compute_edge_attention(zero_params(2, 2), f.embeddings.entity(EntityId{0}), f.frontier, f.embeddings, 0.01);
    CHECK(att.pre == Vector{0.5, 0.5});
    CHECK(att.alpha[0] == doctest::Approx(0.5));
    CHECK(att.alpha[1] == doctest::Approx(0.5));
}

TEST_CASE("edge attention: hand-built weights") {
    auto f = central_fixture({{1, 1}, {0, -1}}, {1, 0}, {0, 1});
    AttentionParams p{Matrix(2, 4), Matrix(2, 2)};
    p.w1(0, 0) = 1.0;  // picks h_u[0]
    p.w1(1, 3) = 1.0;  // picks h_c[1]
    p.w2(0, 0) = 1.0;
    p.w2(1, 1) = 1.0;
    const auto att = compute_edge_attention(p, f.embeddings.entity(EntityId{0}), f.frontier, f.embeddings, 0.01);
    // hidden = (1, 1); query = (1, 1); dot with the tails = 2 and -1.
    const double a = logistic(2.0), b = logistic(-1.0);
    CHECK(att.pre[0] == doctest::Approx(a).epsilon(1e-12));
    CHECK(att.pre[1] == doctest::Approx(b).epsilon(1e-12));
    CHECK(att.pre[0] == doctest::Approx(0.88080).epsilon(1e-5));
    CHECK(att.pre[1] == doctest::Approx(0.26894).epsilon(1e-5));
    const double z = std::exp(a) + std::exp(b);
    CHECK(att.alpha[0] == doctest::Approx(std::exp(a) / z).epsilon(1e-12));
    CHECK(att.alpha[0] == doctest::Approx(0.6484).epsilon(1e-4));
    CHECK(att.alpha[1] == doctest::Approx(0.3516).epsilon(1e-4));
}

TEST_CASE("edge attention: an empty frontier gives an empty map") {
    Frontier empty;
    EmbeddingTable t(1, 1, 2);
    const auto att = compute_edge_attention(zero_params(2, 2), t.entity(EntityId{0}), empty, t, 0.01);
    CHECK(att.alpha.empty());
    CHECK(att.pre.empty());
}

TEST_CASE("node scores: single candidate scores one") {
    const auto f = manual_frontier({1.0}, {{0, 0}}, 1);
    const Vector alpha{1.0};
    CHECK(propagate_node_scores(f, alpha).score == Vector{1.0});
}

TEST_CASE("node scores: one parent, three children") {
    const auto f = manual_frontier({1.0}, {{0, 0}, {0, 1}, {0, 2}}, 3);
    const Vector alpha{0.5, 0.3, 0.2};
    const auto s = propagate_node_scores(f, alpha);
    CHECK(s.raw == alpha);
    const double z = std::exp(0.5) + std::exp(0.3) + std::exp(0.2);
    CHECK(s.score[0] == doctest::Approx(std::exp(0.5) / z));
    CHECK(s.score[0] == doctest::Approx(0.3907).epsilon(1e-4));
    CHECK(s.score[1] == doctest::Approx(0.3199).epsilon(1e-4));
    CHECK(s.score[2] == doctest::Approx(0.2894).epsilon(1e-4));
}

TEST_CASE("node scores: two parents aggregate") {
    // Child 0 has parents 0 (0.6, alpha 0.5) and 1 (0.4, alpha 0.25); child 1
    // has parent 0 only (alpha 0.5).
    const auto f = manual_frontier({0.6, 0.4}, {{0, 0}, {1, 0}, {0, 1}}, 2);
    const Vector alpha{0.5, 0.25, 0.5};
    const auto s = propagate_node_scores(f, alpha);
    CHECK(s.raw[0] == doctest::Approx(0.40));
    CHECK(s.raw[1] == doctest::Approx(0.30));
    CHECK(s.score[0] == doctest::Approx(0.5250).epsilon(1e-4));
    CHECK(s.score[1] == doctest::Approx(0.4750).epsilon(1e-4));
}

TEST_CASE("select_frontier examples") {
    const EntityId ab[] = {EntityId{1}, EntityId{2}};
    const double r2[] = {0.4, 0.3};
    auto sel = select_frontier(ab, r2, 5);
    CHECK(sel.slots == std::vector<std::size_t>{0, 1});
    CHECK(sel.weights[0] == doctest::Approx(0.5250).epsilon(1e-4));
    CHECK(sel.weights[1] == doctest::Approx(0.4750).epsilon(1e-4));

    const EntityId abc[] = {EntityId{1}, EntityId{2}, EntityId{3}};
    const double r3[] = {0.9, 0.5, 0.1};
    sel = select_frontier(abc, r3, 2);
    CHECK(sel.slots == std::vector<std::size_t>{0, 1});
    CHECK(sel.weights[0] == doctest::Approx(0.5987).epsilon(1e-4));
    CHECK(sel.weights[1] == doctest::Approx(0.4013).epsilon(1e-4));

    const EntityId tie[] = {EntityId{7}, EntityId{3}};
    const double rt[] = {0.5, 0.5};
    sel = select_frontier(tie, rt, 1);
    CHECK(sel.slots == std::vector<std::size_t>{1});
    CHECK(sel.weights == Vector{1.0});

    CHECK(select_frontier({}, {}, 3).slots.empty());
    CHECK_THROWS_AS(select_frontier(ab, r2, 0), ArgumentError);
}

TEST_CASE("select_frontier equals sort-and-take on random score maps") {
    Rng rng(31);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = rng.below(40);
        std::vector<EntityId> ids;
        std::set<std::uint32_t> used;
        while (ids.size() < n) {
            const auto id = static_cast<std::uint32_t>(rng.below(1000));
            if (used.insert(id).second) ids.push_back(EntityId{id});
        }
        Vector raw(n);
        // Coarse values force plenty of ties.
        for (auto& v : raw) v = static_cast<double>(rng.below(6)) / 5.0;
        const auto top_n = 1 + rng.below(45);
        std::vector<std::size_t> oracle(n);
        std::iota(oracle.begin(), oracle.end(), 0);
        std::sort(oracle.begin(), oracle.end(), [&](std::size_t a, std::size_t b) {
            return raw[a] > raw[b] || (raw[a] == raw[b] && ids[a] < ids[b]);
        });
        oracle.resize(std::min<std::size_t>(top_n, n));
        CHECK(select_frontier(ids, raw, top_n).slots == oracle);
    }
}

TEST_CASE("diffuse: isolated user gives empty steps") {
    KnowledgeGraph g;
    const auto u = g.intern_entity("u", EntityKind::User);
    g.intern_relation("r");
    EmbeddingTable t(1, 1, 2);
    const auto sub = diffuse(g, t, zero_params(2, 2), u, DiffusionConfig{});
    CHECK(sub.steps.size() == 2);
    CHECK(sub.steps[0].nodes.empty());
    CHECK(sub.steps[1].nodes.empty());
    CHECK(sub.node_count() == 1);
}

TEST_CASE("diffuse: chain walk with N = 1") {
    KnowledgeGraph g;
    g.add_triple("user", EntityKind::User, "review", "p1", EntityKind::Property);
    g.add_triple("i1", EntityKind::Item, "tag", "p1", EntityKind::Property);
    EmbeddingTable t(g.entity_count(), g.relation_count(), 3);
    Rng rng(2);
    testing::fill_uniform(t.entities(), rng, 1.0);
    AttentionParams p{Matrix(3, 6), Matrix(3, 3)};
    testing::fill_uniform(p.w1, rng, 1.0);
    testing::fill_uniform(p.w2, rng, 1.0);
    const auto sub = diffuse(g, t, p, g.entity("user"), {2, 1, 0.01});
    CHECK(sub.steps[0].nodes == std::vector<EntityId>{g.entity("p1")});
    CHECK(sub.steps[0].weights == Vector{1.0});
    CHECK(sub.steps[1].nodes == std::vector<EntityId>{g.entity("i1")});
    CHECK(sub.steps[1].weights == Vector{1.0});
    REQUIRE(sub.steps[1].edges.size() == 1);
    CHECK(sub.steps[1].edges[0].direction == Direction::Inverse);
}

TEST_CASE("diffuse: star with five neighbours keeps the brute-force top three") {
    KnowledgeGraph g;
    const auto u = g.intern_entity("u", EntityKind::User);
    const auto r = g.intern_relation("r");
    std::vector<EntityId> leaves;
    for (int i = 0; i < 5; ++i) {
        leaves.push_back(g.intern_entity("n" + std::to_string(i), EntityKind::Property));
        g.add_triple(Triple{u, r, leaves.back()});
    }
    Rng rng(4);
    const std::size_t d = 3, hidden = 4;
    EmbeddingTable t(g.entity_count(), 1, d);
    testing::fill_uniform(t.entities(), rng, 1.0);
    AttentionParams p{Matrix(hidden, 2 * d), Matrix(d, hidden)};
    testing::fill_uniform(p.w1, rng, 1.0);
    testing::fill_uniform(p.w2, rng, 1.0);

    // Direct evaluation of the attention formula for each leaf.
    Vector input;
    for (auto v : t.entity(u)) input.push_back(v);
    for (auto v : t.entity(u)) input.push_back(v);
    Vector hid(hidden, 0.0);
    for (std::size_t i = 0; i < hidden; ++i) {
        for (std::size_t j = 0; j < 2 * d; ++j) hid[i] += p.w1(i, j) * input[j];
        hid[i] = hid[i] >= 0 ? hid[i] : 0.01 * hid[i];
    }
    Vector query(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < hidden; ++j) query[i] += p.w2(i, j) * hid[j];
    std::vector<std::pair<double, EntityId>> pre;
    double z = 0.0;
    for (auto leaf : leaves) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += query[i] * t.entity(leaf)[i];
        pre.emplace_back(logistic(s), leaf);
        z += std::exp(logistic(s));
    }
    std::vector<std::pair<double, EntityId>> alpha;
    for (auto [v, e] : pre) alpha.emplace_back(std::exp(v) / z, e);
    std::sort(alpha.begin(), alpha.end(), [](auto a, auto b) { return a.first > b.first; });

    const auto sub = diffuse(g, t, p, u, {1, 3, 0.01});
    REQUIRE(sub.steps[0].nodes.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(sub.steps[0].nodes[i] == alpha[i].second);
    CHECK(sum(sub.steps[0].weights) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("diffuse rejects a non-user start") {
    KnowledgeGraph g;
    g.add_triple("u", EntityKind::User, "r", "i", EntityKind::Item);
    EmbeddingTable t(2, 1, 2);
    CHECK_THROWS_AS(diffuse(g, t, zero_params(2, 2), g.entity("i"), DiffusionConfig{}), ArgumentError);
    CHECK_THROWS_AS(diffuse(g, t, zero_params(2, 2), g.entity("u"), DiffusionConfig{0, 1, 0.01}), ArgumentError);
    CHECK_THROWS_AS(diffuse(g, t, zero_params(2, 2), g.entity("u"), DiffusionConfig{2, 0, 0.01}), ArgumentError);
    CHECK_THROWS_AS(diffuse(g, t, zero_params(2, 2), g.entity("u"), DiffusionConfig{2, 3, 1.5}), ArgumentError);
    CHECK_THROWS_AS(diffuse(g, t, zero_params(3, 2), g.entity("u"), DiffusionConfig{}), ArgumentError);
}

TEST_CASE("diffusion invariants on random instances") {
    Rng rng(77);
    for (int trial = 0; trial < 300; ++trial) {
        const auto r = testing::random_instance(rng);
        DiffusionTrace trace;
        const auto sub = diffuse(r.graph, r.embeddings, r.attention, r.user, r.config, &trace);
        CHECK(sub.steps.size() == static_cast<std::size_t>(r.config.steps));
        CHECK(sub.node_count() <= 1 + static_cast<std::size_t>(r.config.steps) * r.config.top_n);
        std::set<EntityId> seen{r.user};
        for (const auto& step : sub.steps) {
            CHECK(step.nodes.size() <= r.config.top_n);
            CHECK(step.nodes.size() == step.weights.size());
            if (!step.nodes.empty()) CHECK(sum(step.weights) == doctest::Approx(1.0).epsilon(1e-9));
            for (auto n : step.nodes) CHECK(seen.insert(n).second);
            for (const auto& e : step.edges) {
                const Triple stored = e.direction == Direction::Forward ? Triple{e.from, e.relation, e.to}
                                                                         : Triple{e.to, e.relation, e.from};
                CHECK(r.graph.contains(stored));
            }
        }
        for (const auto& st : trace.steps) {
            CHECK(sum(st.attention.alpha) == doctest::Approx(1.0).epsilon(1e-9));
            CHECK(sum(st.scores.score) == doctest::Approx(1.0).epsilon(1e-9));
            for (auto a : st.attention.alpha) {
                CHECK(a > 0.0);
                CHECK(a <= 1.0);
            }
            for (auto a : st.attention.pre) {
                CHECK(a > 0.0);
                CHECK(a < 1.0);
            }
        }
        const auto again = diffuse(r.graph, r.embeddings, r.attention, r.user, r.config);
        for (std::size_t s = 0; s < sub.steps.size(); ++s) {
            CHECK(again.steps[s].nodes == sub.steps[s].nodes);
            CHECK(again.steps[s].weights == sub.steps[s].weights);
        }
    }
}

TEST_CASE("softmax ignores a common shift of its inputs") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        Vector x(1 + rng.below(8));
        for (auto& v : x) v = rng.uniform(0, 1);
        const double shift = rng.uniform(-50, 50);
        Vector y = x;
        for (auto& v : y) v += shift;
        const auto a = softmax(x), b = softmax(y);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }
}
