// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#include <cmath>
#include <limits>

#include "doctest.h"

#include "kgsr/error.hpp"
#include "kgsr/trainer.hpp"
#include "support/gradcheck.hpp"
#include "support/planted.hpp"

using namespace kgsr;

using testing::small_world;

namespace {

void check_gradients(const testing::SmallWorld& w, const TrainConfig& config, std::uint64_t seed,
                     std::size_t& compared) {
    const auto r = testing::gradient_check(w, config, seed);
    REQUIRE(r.loss_defined);
    INFO("seed " << seed << " compared " << r.compared << " skipped " << r.skipped);
    CHECK(r.max_relative_error < 1e-3);
    compared += r.compared;
}

}  // namespace

TEST_CASE("configuration defaults") {
    const TrainConfig c;
    CHECK(c.batch_size == 256);
    CHECK(c.epochs == 10);
    CHECK(c.dim == 100);
    CHECK(c.top_n == 100);
    CHECK(c.steps == 2);
    CHECK(c.learning_rate == 0.001);
    const AdamConfig a;
    CHECK(a.beta1 == 0.9);
    CHECK(a.beta2 == 0.999);
    CHECK(a.epsilon == 1e-8);
}

TEST_CASE("invalid configurations are rejected") {
    TrainConfig c;
    c.batch_size = 0;
    CHECK_THROWS_AS(validate(c), ArgumentError);
    c = {};
    c.epochs = 0;
    CHECK_THROWS_AS(validate(c), ArgumentError);
    c = {};
    c.top_n = 0;
    CHECK_THROWS_AS(validate(c), ArgumentError);
    c = {};
    c.learning_rate = 0.0;
    CHECK_THROWS_AS(validate(c), ArgumentError);
}

TEST_CASE("analytic gradients match central differences") {
    const auto w = small_world();
    std::size_t compared = 0;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        TrainConfig c;
        c.dim = 4;
        c.top_n = seed % 2 == 0 ? 100 : 2;
        check_gradients(w, c, seed, compared);
    }
    CHECK(compared > 500);
}

TEST_CASE("contrastive gradients match central differences") {
    const auto w = small_world();
    std::size_t compared = 0;
    TrainConfig c;
    c.dim = 4;
    c.contrastive = true;
    check_gradients(w, c, 21, compared);
    CHECK(compared > 100);
}

TEST_CASE("rows the pass never reads get zero gradient") {
    auto w = small_world();
    const auto lonely = w.graph.intern_entity("lonely", EntityKind::Property);
    EmbeddingTable emb(w.graph.entity_count(), w.graph.relation_count(), 3);
    Rng rng(3);
    testing::fill_uniform(emb.entities(), rng, 1.0);
    const auto model = init_model(emb, 0, 0, 3);
    const std::vector<EntityId> users{w.graph.entity("u0")};
    TrainConfig c;
    c.dim = 3;
    const auto r = forward_backward(users, model, w.graph, w.train, c);
    for (auto v : r.gradients.embeddings.entity(lonely)) CHECK(v == 0.0);
}

TEST_CASE("thread count does not change the batch loss") {
    const auto w = small_world();
    EmbeddingTable emb(w.graph.entity_count(), w.graph.relation_count(), 3);
    Rng rng(4);
    testing::fill_uniform(emb.entities(), rng, 1.0);
    const auto model = init_model(emb, 0, 0, 4);
    const std::vector<EntityId> users{w.graph.entity("u0"), w.graph.entity("u1")};
    TrainConfig c;
    c.dim = 3;
    const auto one = forward_backward(users, model, w.graph, w.train, c);
    c.threads = 2;
    const auto two = forward_backward(users, model, w.graph, w.train, c);
    CHECK(one.mean_loss == doctest::Approx(two.mean_loss).epsilon(1e-12));
    CHECK(one.users_used == two.users_used);
}

TEST_CASE("Adam matches a longhand bias-corrected update") {
    KnowledgeGraph g;
    g.add_triple("u", EntityKind::User, "r", "i", EntityKind::Item);
    EmbeddingTable emb(2, 1, 1);
    auto model = init_model(emb, 1, 1, 1);
    const auto start = model;
    auto grad = zeros_like(model);
    grad.attention.w1(0, 0) = 0.5;
    AdamConfig cfg;
    cfg.learning_rate = 0.1;
    auto state = AdamState::for_model(model, cfg);

    double m = 0.0, v = 0.0, x = start.attention.w1(0, 0);
    const double gs[] = {0.5, -0.2, 0.3};
    for (int t = 1; t <= 3; ++t) {
        grad.attention.w1(0, 0) = gs[t - 1];
        adam_step(model, grad, state);
        m = 0.9 * m + 0.1 * gs[t - 1];
        v = 0.999 * v + 0.001 * gs[t - 1] * gs[t - 1];
        const double mh = m / (1 - std::pow(0.9, t));
        const double vh = v / (1 - std::pow(0.999, t));
        x -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
        CHECK(model.attention.w1(0, 0) == doctest::Approx(x).epsilon(1e-14));
    }
    // The first step moves each touched weight by the learning rate.
    auto fresh = start;
    auto fresh_state = AdamState::for_model(fresh, cfg);
    grad.attention.w1(0, 0) = 1e-3;
    adam_step(fresh, grad, fresh_state);
    CHECK(start.attention.w1(0, 0) - fresh.attention.w1(0, 0) == doctest::Approx(0.1).epsilon(1e-4));
    CHECK(fresh.attention.w2 == start.attention.w2);
    CHECK(state.step == 3);
}

TEST_CASE("a non-finite gradient aborts the step untouched") {
    KnowledgeGraph g;
    g.add_triple("u", EntityKind::User, "r", "i", EntityKind::Item);
    EmbeddingTable emb(2, 1, 2);
    auto model = init_model(emb, 0, 0, 1);
    const auto before = model;
    auto state = AdamState::for_model(model, {});
    auto grad = zeros_like(model);
    grad.encoder.w3(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(adam_step(model, grad, state), NumericError);
    CHECK(model == before);
    CHECK(state.step == 0);
    grad.encoder.w3(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(adam_step(model, grad, state), NumericError);
}

TEST_CASE("training is deterministic and lowers the loss") {
    testing::PlantedOptions o;
    o.users = 60;
    o.items = 40;
    o.properties = 12;
    const auto data = testing::make_planted(o);
    TranseConfig tc;
    tc.dim = 16;
    tc.epochs = 20;
    const auto emb = transe_pretrain(data.graph, tc);
    TrainConfig c;
    c.dim = 16;
    c.epochs = 6;
    c.batch_size = 16;
    c.learning_rate = 0.01;
    TrainHistory h1, h2;
    const auto a = train(data.graph, emb, data.train, c, &h1);
    const auto b = train(data.graph, emb, data.train, c, &h2);
    CHECK(a == b);
    CHECK(h1.epoch_loss == h2.epoch_loss);
    REQUIRE(h1.epoch_loss.size() == 6);
    CHECK(h1.epoch_loss.back() < h1.epoch_loss.front());
    c.seed = 43;
    CHECK_FALSE(train(data.graph, emb, data.train, c) == a);
}

TEST_CASE("train rejects mismatched inputs") {
    const auto w = small_world();
    TrainConfig c;
    c.dim = 4;
    EmbeddingTable wrong_dim(w.graph.entity_count(), w.graph.relation_count(), 3);
    CHECK_THROWS_AS(train(w.graph, wrong_dim, w.train, c), ArgumentError);
    EmbeddingTable wrong_rows(2, w.graph.relation_count(), 4);
    CHECK_THROWS_AS(train(w.graph, wrong_rows, w.train, c), ArgumentError);
    EmbeddingTable ok(w.graph.entity_count(), w.graph.relation_count(), 4);
    CHECK_THROWS_AS(train(w.graph, ok, InteractionSet{}, c), ArgumentError);
}
