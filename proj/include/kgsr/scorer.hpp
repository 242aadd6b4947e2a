// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
//
// Recommendation scoring over a diffused subgraph.
//
// The subgraph is summarised per hop (sum of the selected node embeddings),
// encoded together with the user embedding by a two-layer map, and compared
// with each candidate item embedding through a sigmoid of the dot product.
// A candidate's final score is that similarity times its bridge weight: the
// summed diffusion weights of the last-step nodes adjacent to it, or its own
// weight when the item was itself absorbed into the subgraph.
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kgsr/diffusion.hpp"
#include "kgsr/embedding.hpp"
#include "kgsr/graph.hpp"
#include "kgsr/linalg.hpp"

namespace kgsr {

struct EncoderParams {
    Matrix w3;  // hidden x 3d
    Matrix w4;  // d x hidden

    std::size_t hidden() const { return w3.rows(); }
    friend bool operator==(const EncoderParams&, const EncoderParams&) = default;
};

void check_shapes(const EncoderParams& params, std::size_t dim);

// Sum of the embeddings selected at 1-based `step`; zero vector for an empty
// step. Throws ArgumentError when step is 0 or beyond the subgraph's depth.
Vector hop_embedding(const SubgraphState& subgraph, std::size_t step, const EmbeddingTable& embeddings);

struct EncoderActivation {
    Vector input;       // [h_user ; h_g1 ; h_g2]
    Vector hidden_pre;  // W3 * input
    Vector hidden;      // leaky(hidden_pre)
    Vector output;      // W4 * hidden
};

EncoderActivation encode_user_subgraph_traced(const EncoderParams& encoder, std::span<const double> h_user,
                                              std::span<const double> h_g1, std::span<const double> h_g2,
                                              double slope);

Vector encode_user_subgraph(const EncoderParams& encoder, std::span<const double> h_user,
                            std::span<const double> h_g1, std::span<const double> h_g2, double slope);

// sigmoid(user_repr . item_embedding)
double similarity(std::span<const double> user_repr, std::span<const double> item_embedding);

struct CandidateScore {
    EntityId item{};
    double similarity = 0.0;
    double bridge_weight = 0.0;
    double score = 0.0;  // bridge_weight * similarity
    // Last-step nodes adjacent to the item (empty when the item sits inside
    // the subgraph and is weighted by its own diffusion weight).
    std::vector<EntityId> bridges;
};

// Sorted by score descending, ties by ascending item id.
std::vector<CandidateScore> score_candidates(const SubgraphState& subgraph, const KnowledgeGraph& graph,
                                             const EmbeddingTable& embeddings, const EncoderParams& encoder,
                                             double slope = 0.01);

// Candidate set and bridge weights without the similarity term; shared by
// scoring and training.
struct BridgedItem {
    EntityId item{};
    double weight = 0.0;
    // (1-based step, position) of each contributing subgraph node.
    std::vector<std::pair<std::size_t, std::size_t>> sources;
};

std::vector<BridgedItem> candidate_items(const SubgraphState& subgraph, const KnowledgeGraph& graph);

inline constexpr double kLossClamp = 1e-12;

struct UserLoss {
    bool defined = false;              // false when no positive is a candidate
    double loss = 0.0;
    std::size_t used_positives = 0;
    std::size_t skipped_positives = 0;  // positives with no candidate score
};

// Mean negative log of the clamped score over the positives that are
// candidates. Throws ArgumentError for an empty positive set.
UserLoss user_loss(std::span<const CandidateScore> scores, std::span<const EntityId> positives);

struct ExplanationPath {
    std::vector<EntityId> nodes;  // user first, item last
    std::vector<PathEdge> edges;  // nodes.size() - 1 hops
    double weight = 1.0;          // product of interior node weights

    std::size_t hops() const { return edges.size(); }
    friend bool operator==(const ExplanationPath&, const ExplanationPath&) = default;
};

// Backtracks from `item` to the user along traversed edges. Ordered by weight
// descending (then by node ids), at most `limit` paths. Throws NotFoundError
// when the item is not a candidate of this subgraph.
std::vector<ExplanationPath> extract_paths(const SubgraphState& subgraph, const KnowledgeGraph& graph,
                                           EntityId item, std::size_t limit);

// True when every hop is a stored triple in the stated direction and the
// node/edge sequence is contiguous.
bool validate_path(const ExplanationPath& path, const KnowledgeGraph& graph);

// "User_1 -[review]-> reliable <-[tag]- C_1 -[sale]-> Item_4"
std::string serialize_path(const ExplanationPath& path, const KnowledgeGraph& graph);

}  // namespace kgsr
