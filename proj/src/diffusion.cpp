// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#include "kgsr/diffusion.hpp"

#include <numeric>
#include <unordered_set>

#include "kgsr/error.hpp"

namespace kgsr {

void validate(const DiffusionConfig& config) {
    if (config.steps < 1) throw ArgumentError("diffusion: steps must be at least 1");
    if (config.top_n < 1) throw ArgumentError("diffusion: top-N must be at least 1");
    if (!(config.slope > 0.0 && config.slope < 1.0)) throw ArgumentError("diffusion: slope must lie in (0, 1)");
}

void check_shapes(const AttentionParams& params, std::size_t dim) {
    const auto hidden = params.w1.rows();
    if (hidden == 0 || params.w1.cols() != 2 * dim || params.w2.rows() != dim || params.w2.cols() != hidden) {
        throw ArgumentError("attention parameters do not match embedding dimension " + std::to_string(dim));
    }
}

CentralActivation attention_query(const AttentionParams& params, std::span<const double> h_user,
                                  std::span<const double> h_central, double slope) {
    CentralActivation act;
    act.input = concat({h_user, h_central});
    act.hidden_pre = matvec(params.w1, act.input);
    act.hidden.resize(act.hidden_pre.size());
    for (std::size_t i = 0; i < act.hidden.size(); ++i) act.hidden[i] = leaky_relu(act.hidden_pre[i], slope);
    act.query = matvec(params.w2, act.hidden);
    return act;
}

EdgeAttention compute_edge_attention(const AttentionParams& params, std::span<const double> h_user,
                                     const Frontier& frontier, const EmbeddingTable& embeddings, double slope,
                                     std::vector<CentralActivation>* activations) {
    EdgeAttention out;
    if (frontier.edges.empty()) return out;

    // The MLP input depends only on (user, central), so each central is
    // evaluated once and shared by all of its edges.
    std::vector<CentralActivation> local;
    auto& acts = activations ? *activations : local;
    acts.clear();
    acts.reserve(frontier.centrals.size());
    for (auto c : frontier.centrals) acts.push_back(attention_query(params, h_user, embeddings.entity(c), slope));

    out.pre.resize(frontier.edges.size());
    for (std::size_t i = 0; i < frontier.edges.size(); ++i) {
        const auto& e = frontier.edges[i];
        out.pre[i] = sigmoid(dot(acts[e.source_slot].query, embeddings.entity(e.edge.to)));
    }
    out.alpha = softmax(out.pre);
    return out;
}

NodeScores propagate_node_scores(const Frontier& frontier, std::span<const double> alpha) {
    NodeScores out;
    out.raw.assign(frontier.candidates.size(), 0.0);
    for (std::size_t i = 0; i < frontier.edges.size(); ++i) {
        const auto& e = frontier.edges[i];
        out.raw[e.target_slot] += frontier.central_scores[e.source_slot] * alpha[i];
    }
    out.score = softmax(out.raw);
    return out;
}

Selection select_frontier(std::span<const EntityId> nodes, std::span<const double> raw, std::size_t top_n) {
    if (top_n < 1) throw ArgumentError("select_frontier: N must be at least 1");
    if (nodes.size() != raw.size()) throw ArgumentError("select_frontier: nodes and scores differ in length");
    Selection sel;
    std::vector<std::size_t> order(nodes.size());
    std::iota(order.begin(), order.end(), 0);
    const auto keep = std::min(top_n, order.size());
    auto better = [&](std::size_t a, std::size_t b) {
        if (raw[a] != raw[b]) return raw[a] > raw[b];
        return nodes[a] < nodes[b];
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(), better);
    sel.slots.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
    Vector kept(keep);
    for (std::size_t i = 0; i < keep; ++i) kept[i] = raw[sel.slots[i]];
    sel.weights = softmax(kept);
    return sel;
}

bool SubgraphState::contains(EntityId e) const {
    if (e == user) return true;
    return locate(e).first != 0;
}

std::size_t SubgraphState::node_count() const {
    std::size_t n = 1;
    for (const auto& s : steps) n += s.nodes.size();
    return n;
}

std::pair<std::size_t, std::size_t> SubgraphState::locate(EntityId e) const {
    for (std::size_t s = 0; s < steps.size(); ++s) {
        const auto& nodes = steps[s].nodes;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (nodes[i] == e) return {s + 1, i};
        }
    }
    return {0, 0};
}

SubgraphState diffuse(const KnowledgeGraph& graph, const EmbeddingTable& embeddings, const AttentionParams& params,
                      EntityId user, const DiffusionConfig& config, DiffusionTrace* trace) {
    validate(config);
    if (!graph.has_entity(user)) throw NotFoundError("diffuse: unknown entity id " + std::to_string(index(user)));
    if (graph.kind(user) != EntityKind::User) {
        throw ArgumentError("diffuse: '" + graph.entity_name(user) + "' is not a user");
    }
    if (!embeddings.matches(graph)) throw ArgumentError("diffuse: embedding table does not match the graph");
    check_shapes(params, embeddings.dim());

    SubgraphState state;
    state.user = user;
    state.steps.resize(static_cast<std::size_t>(config.steps));
    if (trace) trace->steps.clear();

    std::unordered_set<std::uint32_t> visited{index(user)};
    auto is_visited = [&](EntityId e) { return visited.contains(index(e)); };
    std::vector<EntityId> centrals{user};
    Vector central_scores{1.0};
    const auto h_user = embeddings.entity(user);

    for (std::size_t s = 0; s < state.steps.size(); ++s) {
        auto frontier = build_frontier(graph, centrals, central_scores, is_visited);
        if (frontier.edges.empty()) break;

        std::vector<CentralActivation> acts;
        auto attention = compute_edge_attention(params, h_user, frontier, embeddings, config.slope, &acts);
        auto scores = propagate_node_scores(frontier, attention.alpha);
        auto selection = select_frontier(frontier.candidates, scores.raw, config.top_n);

        auto& step = state.steps[s];
        std::vector<char> chosen(frontier.candidates.size(), 0);
        for (std::size_t i = 0; i < selection.slots.size(); ++i) {
            const auto slot = selection.slots[i];
            chosen[slot] = 1;
            step.nodes.push_back(frontier.candidates[slot]);
            visited.insert(index(frontier.candidates[slot]));
        }
        step.weights = selection.weights;
        for (const auto& e : frontier.edges) {
            if (chosen[e.target_slot]) step.edges.push_back(e.edge);
        }

        centrals = step.nodes;
        central_scores = step.weights;
        if (trace) {
            trace->steps.push_back(
                {std::move(frontier), std::move(acts), std::move(attention), std::move(scores), std::move(selection)});
        }
    }
    return state;
}

}  // namespace kgsr
