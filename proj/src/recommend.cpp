// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#include "kgsr/recommend.hpp"

#include <cstdio>
#include <ostream>

namespace kgsr {

std::vector<Recommendation> recommend(const ModelParams& model, const KnowledgeGraph& graph,
                                      const InteractionSet& train, EntityId user, const DiffusionConfig& diffusion,
                                      std::size_t top_k) {
    const auto sub = diffuse(graph, model.embeddings, model.attention, user, diffusion);
    const auto scores = score_candidates(sub, graph, model.embeddings, model.encoder, diffusion.slope);
    std::vector<Recommendation> out;
    for (const auto& c : scores) {
        if (out.size() >= top_k) break;
        if (train.contains(user, c.item)) continue;
        Recommendation rec;
        rec.rank = out.size() + 1;
        rec.candidate = c;
        auto paths = extract_paths(sub, graph, c.item, 1);
        if (!paths.empty()) rec.top_path = std::move(paths.front());
        out.push_back(std::move(rec));
    }
    return out;
}

void write_recommendations(const KnowledgeGraph& graph, EntityId user, const std::vector<Recommendation>& recs,
                           std::ostream& out) {
    char buf[96];
    for (const auto& r : recs) {
        std::snprintf(buf, sizeof buf, "%.9g\t%.9g\t%.9g", r.candidate.score, r.candidate.bridge_weight,
                      r.candidate.similarity);
        out << graph.entity_name(user) << '\t' << r.rank << '\t' << graph.entity_name(r.candidate.item) << '\t' << buf
            << '\t' << (r.top_path ? serialize_path(*r.top_path, graph) : std::string()) << '\n';
    }
}

}  // namespace kgsr
