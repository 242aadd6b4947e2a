// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
//
// Attentive diffusion: grow a user-centred subgraph one hop at a time.
//
// Each step scores every frontier edge (central -> unvisited neighbour) with
//   pre(e)  = sigmoid( (W2 * leaky(W1 * [h_user ; h_central])) . h_neighbour )
//   alpha   = softmax of pre over all frontier edges
// aggregates raw(n) = sum over edges into n of score(central) * alpha, keeps
// the top-N neighbours by raw score (ties to the lower id), and re-weights the
// kept nodes with a softmax of raw restricted to them. Kept nodes become the
// next step's centrals, carrying those weights as their scores.
#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "kgsr/embedding.hpp"
#include "kgsr/graph.hpp"
#include "kgsr/linalg.hpp"

namespace kgsr {

struct AttentionParams {
    Matrix w1;  // hidden x 2d
    Matrix w2;  // d x hidden

    std::size_t hidden() const { return w1.rows(); }
    friend bool operator==(const AttentionParams&, const AttentionParams&) = default;
};

struct DiffusionConfig {
    int steps = 2;
    std::size_t top_n = 100;
    double slope = 0.01;
};

void validate(const DiffusionConfig& config);
void check_shapes(const AttentionParams& params, std::size_t dim);

// One edge traversed from `from` to `to`. Forward means the stored triple is
// (from, relation, to); Inverse means it is (to, relation, from).
struct PathEdge {
    EntityId from;
    RelationId relation;
    Direction direction;
    EntityId to;

    friend bool operator==(const PathEdge&, const PathEdge&) = default;
};

struct FrontierEdge {
    std::size_t source_slot;  // index into Frontier::centrals
    std::size_t target_slot;  // index into Frontier::candidates
    PathEdge edge;
};

struct Frontier {
    std::vector<EntityId> centrals;
    Vector central_scores;
    std::vector<FrontierEdge> edges;
    std::vector<EntityId> candidates;  // ascending id, none already visited
};

// `is_visited(e)` must return true for every node already in the subgraph.
template <typename VisitedFn>
Frontier build_frontier(const KnowledgeGraph& graph, std::span<const EntityId> centrals,
                        std::span<const double> scores, VisitedFn&& is_visited);

struct EdgeAttention {
    Vector pre;    // sigmoid outputs, in (0, 1)
    Vector alpha;  // softmax over the frontier, sums to 1
};

// Activations of the attention MLP for one central entity.
struct CentralActivation {
    Vector input;       // [h_user ; h_central]
    Vector hidden_pre;  // W1 * input
    Vector hidden;      // leaky(hidden_pre)
    Vector query;       // W2 * hidden
};

CentralActivation attention_query(const AttentionParams& params, std::span<const double> h_user,
                                  std::span<const double> h_central, double slope);

// Empty frontier -> empty result. `activations`, when given, receives one
// entry per central.
EdgeAttention compute_edge_attention(const AttentionParams& params, std::span<const double> h_user,
                                     const Frontier& frontier, const EmbeddingTable& embeddings, double slope,
                                     std::vector<CentralActivation>* activations = nullptr);

struct NodeScores {
    Vector raw;    // aggregated score per candidate
    Vector score;  // softmax of raw over all candidates
};

NodeScores propagate_node_scores(const Frontier& frontier, std::span<const double> alpha);

struct Selection {
    std::vector<std::size_t> slots;  // indices into the input, best first
    Vector weights;                  // softmax of raw over the selection
};

// Top-N by raw score, ties broken by ascending entity id.
Selection select_frontier(std::span<const EntityId> nodes, std::span<const double> raw, std::size_t top_n);

struct SubgraphStep {
    std::vector<EntityId> nodes;  // best first
    Vector weights;               // v, aligned with nodes
    std::vector<PathEdge> edges;  // frontier edges that reached a selected node
};

struct SubgraphState {
    EntityId user{};
    std::vector<SubgraphStep> steps;  // always `config.steps` entries

    bool contains(EntityId e) const;
    std::size_t node_count() const;  // including the user
    // 1-based step holding e plus its position there, or {0, 0} if absent.
    std::pair<std::size_t, std::size_t> locate(EntityId e) const;
};

struct StepTrace {
    Frontier frontier;
    std::vector<CentralActivation> activations;
    EdgeAttention attention;
    NodeScores scores;
    Selection selection;
};

struct DiffusionTrace {
    std::vector<StepTrace> steps;  // populated steps only
};

SubgraphState diffuse(const KnowledgeGraph& graph, const EmbeddingTable& embeddings, const AttentionParams& params,
                      EntityId user, const DiffusionConfig& config, DiffusionTrace* trace = nullptr);

// ---------------------------------------------------------------------------

template <typename VisitedFn>
Frontier build_frontier(const KnowledgeGraph& graph, std::span<const EntityId> centrals,
                        std::span<const double> scores, VisitedFn&& is_visited) {
    Frontier frontier;
    frontier.centrals.assign(centrals.begin(), centrals.end());
    frontier.central_scores.assign(scores.begin(), scores.end());
    for (std::size_t slot = 0; slot < centrals.size(); ++slot) {
        for (const auto& n : graph.neighbors(centrals[slot])) {
            if (is_visited(n.entity)) continue;
            frontier.edges.push_back({slot, 0, {centrals[slot], n.relation, n.direction, n.entity}});
            frontier.candidates.push_back(n.entity);
        }
    }
    std::sort(frontier.candidates.begin(), frontier.candidates.end());
    frontier.candidates.erase(std::unique(frontier.candidates.begin(), frontier.candidates.end()),
                              frontier.candidates.end());
    for (auto& e : frontier.edges) {
        const auto it = std::lower_bound(frontier.candidates.begin(), frontier.candidates.end(), e.edge.to);
        e.target_slot = static_cast<std::size_t>(it - frontier.candidates.begin());
    }
    return frontier;
}

}  // namespace kgsr
