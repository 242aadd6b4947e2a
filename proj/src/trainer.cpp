// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#include "kgsr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <spdlog/spdlog.h>

#include "kgsr/error.hpp"
#include "kgsr/rng.hpp"
#include "kgsr/scorer.hpp"

namespace kgsr {

void validate(const TrainConfig& config) {
    if (config.batch_size < 1) throw ArgumentError("train: batch size must be positive");
    if (config.epochs < 1) throw ArgumentError("train: epochs must be positive");
    if (config.dim < 1) throw ArgumentError("train: dimension must be positive");
    if (!(config.learning_rate > 0.0)) throw ArgumentError("train: learning rate must be positive");
    if (config.threads < 1) throw ArgumentError("train: threads must be positive");
    validate(diffusion_config(config));
}

DiffusionConfig diffusion_config(const TrainConfig& config) {
    return DiffusionConfig{config.steps, config.top_n, config.slope};
}

namespace {

struct PassStats {
    double loss_sum = 0.0;
    std::size_t users_used = 0;
    std::size_t users_skipped = 0;
    std::size_t positives_skipped = 0;
};

void add_leaky_backward(Vector& dz, std::span<const double> pre, double slope) {
    for (std::size_t i = 0; i < dz.size(); ++i) dz[i] *= leaky_relu_grad(pre[i], slope);
}

bool all_zero(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

// Runs one user's forward pass and accumulates the gradient of that user's
// loss into `grad`. Returns false when the loss is undefined.
bool user_pass(EntityId user, const ModelParams& model, const KnowledgeGraph& graph, const InteractionSet& train,
               const TrainConfig& config, std::uint64_t sample_seed, ModelParams& grad, PassStats& stats) {
    const auto positives = train.items(user);
    const auto& emb = model.embeddings;
    const auto d = emb.dim();
    const double slope = config.slope;

    DiffusionTrace trace;
    const auto sub = diffuse(graph, emb, model.attention, user, diffusion_config(config), &trace);
    const auto items = candidate_items(sub, graph);

    auto find_item = [&](EntityId item) -> const BridgedItem* {
        auto it = std::lower_bound(items.begin(), items.end(), item,
                                   [](const BridgedItem& c, EntityId e) { return c.item < e; });
        return it != items.end() && it->item == item ? &*it : nullptr;
    };

    std::vector<const BridgedItem*> pos;
    for (auto item : positives) {
        if (const auto* c = find_item(item)) {
            pos.push_back(c);
        } else {
            ++stats.positives_skipped;
        }
    }
    if (pos.empty()) {
        ++stats.users_skipped;
        return false;
    }

    std::vector<const BridgedItem*> neg;
    if (config.contrastive) {
        std::vector<const BridgedItem*> pool;
        for (const auto& c : items) {
            if (!train.contains(user, c.item)) pool.push_back(&c);
        }
        Rng rng(sample_seed ^ ((static_cast<std::uint64_t>(index(user)) + 1) * 0x9E3779B97F4A7C15ULL));
        rng.shuffle(std::span<const BridgedItem*>(pool));
        pool.resize(std::min(pool.size(), pos.size()));
        neg = std::move(pool);
    }

    // Encoder forward.
    const Vector zero(d, 0.0);
    const auto g1 = hop_embedding(sub, 1, emb);
    const auto g2 = sub.steps.size() >= 2 ? hop_embedding(sub, 2, emb) : zero;
    const auto enc = encode_user_subgraph_traced(model.encoder, emb.entity(user), g1, g2, slope);
    const auto& repr = enc.output;

    // Loss and its gradient w.r.t. repr, item rows and the diffusion weights.
    std::vector<Vector> dv(sub.steps.size());
    for (std::size_t s = 0; s < sub.steps.size(); ++s) dv[s].assign(sub.steps[s].nodes.size(), 0.0);
    Vector drepr(d, 0.0);
    double loss = 0.0;

    auto score_term = [&](const BridgedItem& c, bool positive, double weight) {
        const auto h_item = emb.entity(c.item);
        const double sim = sigmoid(dot(repr, h_item));
        const double score = c.weight * sim;
        double dscore = 0.0;
        if (positive) {
            if (score > kLossClamp) {
                loss -= weight * std::log(score);
                dscore = -weight / score;
            } else {
                loss -= weight * std::log(kLossClamp);
            }
        } else {
            const double rest = 1.0 - score;
            if (rest > kLossClamp) {
                loss -= weight * std::log(rest);
                dscore = weight / rest;
            } else {
                loss -= weight * std::log(kLossClamp);
            }
        }
        if (dscore == 0.0) return;
        const double dt = dscore * c.weight * sim * (1.0 - sim);
        axpy(dt, h_item, drepr);
        axpy(dt, repr, grad.embeddings.entity(c.item));
        for (const auto& [s, k] : c.sources) dv[s - 1][k] += dscore * sim;
    };
    for (const auto* c : pos) score_term(*c, true, 1.0 / static_cast<double>(pos.size()));
    for (const auto* c : neg) score_term(*c, false, 1.0 / static_cast<double>(neg.size()));

    // Encoder backward.
    {
        add_outer(grad.encoder.w4, drepr, enc.hidden);
        auto dz = matvec_transposed(model.encoder.w4, drepr);
        add_leaky_backward(dz, enc.hidden_pre, slope);
        add_outer(grad.encoder.w3, dz, enc.input);
        const auto dinput = matvec_transposed(model.encoder.w3, dz);
        const std::span<const double> din(dinput);
        axpy(1.0, din.subspan(0, d), grad.embeddings.entity(user));
        for (std::size_t s = 0; s < std::min<std::size_t>(2, sub.steps.size()); ++s) {
            for (auto n : sub.steps[s].nodes) axpy(1.0, din.subspan((s + 1) * d, d), grad.embeddings.entity(n));
        }
    }

    // Diffusion backward, last populated step first.
    for (std::size_t s = trace.steps.size(); s-- > 0;) {
        const auto& st = trace.steps[s];
        const auto& fr = st.frontier;
        const auto dsel = softmax_backward(st.selection.weights, dv[s]);
        Vector draw(fr.candidates.size(), 0.0);
        for (std::size_t i = 0; i < st.selection.slots.size(); ++i) draw[st.selection.slots[i]] = dsel[i];

        Vector dalpha(fr.edges.size(), 0.0);
        Vector dcentral(fr.centrals.size(), 0.0);
        for (std::size_t e = 0; e < fr.edges.size(); ++e) {
            const auto& edge = fr.edges[e];
            const double g = draw[edge.target_slot];
            if (g == 0.0) continue;
            dalpha[e] = g * fr.central_scores[edge.source_slot];
            dcentral[edge.source_slot] += g * st.attention.alpha[e];
        }
        const auto dpre = softmax_backward(st.attention.alpha, dalpha);

        std::vector<Vector> dquery(fr.centrals.size(), Vector(d, 0.0));
        for (std::size_t e = 0; e < fr.edges.size(); ++e) {
            const auto& edge = fr.edges[e];
            const double a = st.attention.pre[e];
            const double dt = dpre[e] * a * (1.0 - a);
            if (dt == 0.0) continue;
            axpy(dt, emb.entity(edge.edge.to), dquery[edge.source_slot]);
            axpy(dt, st.activations[edge.source_slot].query, grad.embeddings.entity(edge.edge.to));
        }
        for (std::size_t c = 0; c < fr.centrals.size(); ++c) {
            if (all_zero(dquery[c])) continue;
            const auto& act = st.activations[c];
            add_outer(grad.attention.w2, dquery[c], act.hidden);
            auto dz = matvec_transposed(model.attention.w2, dquery[c]);
            add_leaky_backward(dz, act.hidden_pre, slope);
            add_outer(grad.attention.w1, dz, act.input);
            const auto dinput = matvec_transposed(model.attention.w1, dz);
            const std::span<const double> din(dinput);
            axpy(1.0, din.subspan(0, d), grad.embeddings.entity(user));
            axpy(1.0, din.subspan(d, d), grad.embeddings.entity(fr.centrals[c]));
        }
        // Central scores of step s are the weights selected at step s - 1.
        if (s > 0) {
            for (std::size_t c = 0; c < dcentral.size(); ++c) dv[s - 1][c] += dcentral[c];
        }
    }

    stats.loss_sum += loss;
    ++stats.users_used;
    return true;
}

void add_into(ModelParams& into, const ModelParams& from) {
    auto dst = parameter_blocks(into);
    const auto src = parameter_blocks(from);
    for (std::size_t b = 0; b < dst.size(); ++b) {
        for (std::size_t i = 0; i < dst[b].size(); ++i) dst[b][i] += src[b][i];
    }
}

void scale(ModelParams& params, double factor) {
    for (auto block : parameter_blocks(params)) {
        for (double& v : block) v *= factor;
    }
}

bool all_finite(const ModelParams& params) {
    for (auto block : parameter_blocks(params)) {
        for (double v : block) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

}  // namespace

BatchResult forward_backward(std::span<const EntityId> users, const ModelParams& model, const KnowledgeGraph& graph,
                             const InteractionSet& train, const TrainConfig& config, std::uint64_t sample_seed) {
    check_shapes(model);
    if (!model.embeddings.matches(graph)) throw ArgumentError("forward_backward: model does not match the graph");

    const auto workers = std::max<std::size_t>(1, std::min(config.threads, users.size()));
    std::vector<ModelParams> grads(workers, zeros_like(model));
    std::vector<PassStats> stats(workers);
    auto run_chunk = [&](std::size_t w) {
        const auto begin = users.size() * w / workers;
        const auto end = users.size() * (w + 1) / workers;
        for (auto i = begin; i < end; ++i) {
            if (train.items(users[i]).empty()) {
                ++stats[w].users_skipped;
                continue;
            }
            user_pass(users[i], model, graph, train, config, sample_seed, grads[w], stats[w]);
        }
    };
    if (workers == 1) {
        run_chunk(0);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run_chunk, w);
    }

    // Reduce in chunk order so the result depends only on the thread count.
    BatchResult result;
    result.gradients = std::move(grads[0]);
    for (std::size_t w = 1; w < workers; ++w) add_into(result.gradients, grads[w]);
    for (const auto& s : stats) {
        result.loss_sum += s.loss_sum;
        result.users_used += s.users_used;
        result.users_skipped += s.users_skipped;
        result.positives_skipped += s.positives_skipped;
    }
    if (result.users_used > 0) {
        result.mean_loss = result.loss_sum / static_cast<double>(result.users_used);
        scale(result.gradients, 1.0 / static_cast<double>(result.users_used));
    }
    return result;
}

AdamState AdamState::for_model(const ModelParams& model, AdamConfig config) {
    return AdamState{config, zeros_like(model), zeros_like(model), 0};
}

void adam_step(ModelParams& model, const ModelParams& gradients, AdamState& state) {
    auto params = parameter_blocks(model);
    const auto grads = parameter_blocks(gradients);
    auto m = parameter_blocks(state.first_moment);
    auto v = parameter_blocks(state.second_moment);
    for (std::size_t b = 0; b < params.size(); ++b) {
        if (params[b].size() != grads[b].size() || params[b].size() != m[b].size() ||
            params[b].size() != v[b].size()) {
            throw ArgumentError("adam_step: parameter, gradient and moment shapes differ");
        }
    }
    if (!all_finite(gradients)) throw NumericError("adam_step: non-finite gradient, step aborted");

    const auto& c = state.config;
    const auto t = static_cast<double>(state.step + 1);
    const double correction1 = 1.0 - std::pow(c.beta1, t);
    const double correction2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t b = 0; b < params.size(); ++b) {
        for (std::size_t i = 0; i < params[b].size(); ++i) {
            const double g = grads[b][i];
            m[b][i] = c.beta1 * m[b][i] + (1.0 - c.beta1) * g;
            v[b][i] = c.beta2 * v[b][i] + (1.0 - c.beta2) * g * g;
            const double m_hat = m[b][i] / correction1;
            const double v_hat = v[b][i] / correction2;
            params[b][i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
        }
    }
    ++state.step;
#ifndef NDEBUG
    if (!all_finite(model) || !all_finite(state.first_moment) || !all_finite(state.second_moment)) {
        throw NumericError("adam_step: non-finite parameter after update");
    }
#endif
}

Checkpoint train(const KnowledgeGraph& graph, const EmbeddingTable& pretrained, const InteractionSet& interactions,
                 const TrainConfig& config, TrainHistory* history) {
    validate(config);
    if (pretrained.dim() != config.dim) {
        throw ArgumentError("train: pretrained embeddings have dimension " + std::to_string(pretrained.dim()) +
                            " but the configuration asks for " + std::to_string(config.dim));
    }
    if (!pretrained.matches(graph)) throw ArgumentError("train: pretrained embeddings do not match the graph");

    auto model = init_model(pretrained, config.attention_hidden, config.encoder_hidden, config.seed);
    auto adam = AdamState::for_model(model, AdamConfig{config.learning_rate});

    std::vector<EntityId> users;
    for (const auto& [user, items] : interactions.by_user()) {
        if (!items.empty()) users.push_back(user);
    }
    if (users.empty()) throw ArgumentError("train: no user has a training interaction");

    Rng order_rng(config.seed ^ 0x5DEECE66DULL);
    if (history) *history = {};
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        order_rng.shuffle(std::span<EntityId>(users));
        double loss_sum = 0.0;
        std::size_t used = 0;
        std::size_t skipped = 0;
        for (std::size_t begin = 0, batch = 0; begin < users.size(); begin += config.batch_size, ++batch) {
            const auto end = std::min(users.size(), begin + config.batch_size);
            const std::span<const EntityId> slice(users.data() + begin, end - begin);
            const auto sample_seed = config.seed * 0x9E3779B97F4A7C15ULL + (static_cast<std::uint64_t>(epoch) << 32) + batch;
            auto result = forward_backward(slice, model, graph, interactions, config, sample_seed);
            loss_sum += result.loss_sum;
            used += result.users_used;
            skipped += result.users_skipped;
            if (result.users_used > 0) adam_step(model, result.gradients, adam);
        }
        const double mean = used > 0 ? loss_sum / static_cast<double>(used) : 0.0;
        spdlog::info("train epoch={}/{} mean_loss={:.6f} users={} skipped={}", epoch + 1, config.epochs, mean, used,
                     skipped);
        if (history) {
            history->epoch_loss.push_back(mean);
            history->epoch_users_skipped.push_back(skipped);
        }
    }
    return make_checkpoint(model, graph);
}

}  // namespace kgsr
