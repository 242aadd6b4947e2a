// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kgsr/diffusion.hpp"
#include "kgsr/graph.hpp"
#include "kgsr/interactions.hpp"
#include "kgsr/model.hpp"
#include "kgsr/scorer.hpp"

namespace kgsr {

// Binary-relevance top-K metrics for one ranked list.
struct RankingMetrics {
    double ndcg = 0.0;
    double recall = 0.0;
    double hit = 0.0;
    double precision = 0.0;
};

// Throws ArgumentError when k is 0 or `relevant` is empty.
RankingMetrics evaluate_ranking(std::span<const EntityId> ranked, std::span<const EntityId> relevant, std::size_t k);

// Scored candidates first (in score order), then every other catalog item by
// ascending id; items in `exclude` are dropped everywhere.
std::vector<EntityId> rank_catalog(std::span<const CandidateScore> scored, std::span<const EntityId> catalog,
                                   std::span<const EntityId> exclude);

struct EvalReport {
    std::size_t k = 10;
    double ndcg = 0.0;
    double recall = 0.0;
    double hit_rate = 0.0;
    double precision = 0.0;
    std::size_t users_evaluated = 0;
    std::size_t users_skipped = 0;  // diffusion produced no candidate

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Evaluates every test user: diffuse, score, rank the catalog minus the
// user's training items, and compare against the held-out items.
EvalReport evaluate_model(const Checkpoint& checkpoint, const KnowledgeGraph& graph, const InteractionSet& train,
                          const InteractionSet& test, std::size_t k, const DiffusionConfig& diffusion,
                          std::size_t threads = 1);

std::string report_json(const EvalReport& report, int indent = 2);

struct LabeledReport {
    std::string label;
    EvalReport report;
};

// Aligned plain-text table, one row per report.
std::string report_table(std::span<const LabeledReport> rows, const std::string& label_header = "run");

}  // namespace kgsr
