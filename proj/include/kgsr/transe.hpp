// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
//
// TransE pretraining: triples are scored by the distance ||h + r - t|| and the
// margin ranking loss max(0, margin + d(pos) - d(neg)) is minimized with plain
// SGD against filtered, uniformly corrupted negatives.
#pragma once

#include <cstdint>
#include <vector>

#include "kgsr/embedding.hpp"
#include "kgsr/graph.hpp"
#include "kgsr/rng.hpp"

namespace kgsr {

enum class Norm : int { L1 = 1, L2 = 2 };

struct TranseConfig {
    std::size_t dim = 100;
    double margin = 1.0;
    double learning_rate = 0.01;
    int epochs = 100;
    int negatives = 1;
    Norm norm = Norm::L2;
    std::uint64_t seed = 7;
};

void validate(const TranseConfig& config);  // throws ArgumentError

double transe_score(const EmbeddingTable& table, const Triple& triple, Norm norm);

// Replaces head or tail (fair coin) with a different, uniformly drawn entity.
// Corruptions that are stored triples are redrawn up to a fixed number of
// times; after that the last draw is returned unfiltered.
Triple sample_negative(const KnowledgeGraph& graph, const Triple& triple, Rng& rng);

double margin_loss(const EmbeddingTable& table, const Triple& positive, const Triple& negative,
                   double margin, Norm norm);

// Accumulates d(margin_loss)/d(table) into grad (same shape as table).
void margin_loss_gradient(const EmbeddingTable& table, const Triple& positive, const Triple& negative,
                          double margin, Norm norm, EmbeddingTable& grad);

struct TranseHistory {
    std::vector<double> mean_loss;            // one entry per epoch
    std::vector<double> mean_positive_score;  // entry 0 is before training
};

EmbeddingTable transe_pretrain(const KnowledgeGraph& graph, const TranseConfig& config,
                               TranseHistory* history = nullptr);

void normalize_entity_rows(EmbeddingTable& table);

}  // namespace kgsr
