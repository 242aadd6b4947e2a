// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "kgsr/diffusion.hpp"
#include "kgsr/graph.hpp"
#include "kgsr/interactions.hpp"
#include "kgsr/model.hpp"
#include "kgsr/scorer.hpp"

namespace kgsr {

struct Recommendation {
    std::size_t rank = 0;  // 1-based
    CandidateScore candidate;
    std::optional<ExplanationPath> top_path;
};

// Top-k scored items for `user`, excluding items the user already has in
// `train`. Unscored items are never recommended.
std::vector<Recommendation> recommend(const ModelParams& model, const KnowledgeGraph& graph,
                                      const InteractionSet& train, EntityId user, const DiffusionConfig& diffusion,
                                      std::size_t top_k);

// Tab separated: user, rank, item, score, bridge weight, similarity, top path.
void write_recommendations(const KnowledgeGraph& graph, EntityId user, const std::vector<Recommendation>& recs,
                           std::ostream& out);

}  // namespace kgsr
