// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
//
// Joint training of the attention matrices, the subgraph encoder and the
// entity embeddings against the per-user negative log-likelihood of the
// positive items' final scores.
//
// Gradients are exact reverse-mode derivatives of the continuous computation
// with the discrete top-N choices held fixed: they flow through the sigmoid
// edge scores, both softmaxes, the propagated node weights, the encoder and
// the similarity, and reach every embedding row the pass read (user,
// centrals, frontier neighbours, hop members, scored candidates). Rows the
// pass never read get exactly zero.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kgsr/diffusion.hpp"
#include "kgsr/embedding.hpp"
#include "kgsr/graph.hpp"
#include "kgsr/interactions.hpp"
#include "kgsr/model.hpp"

namespace kgsr {

struct TrainConfig {
    std::size_t batch_size = 256;
    int epochs = 10;
    std::size_t dim = 100;
    std::size_t top_n = 100;
    int steps = 2;
    std::uint64_t seed = 42;
    double learning_rate = 0.001;
    bool contrastive = false;
    std::size_t attention_hidden = 0;  // 0 -> dim
    std::size_t encoder_hidden = 0;    // 0 -> dim
    double slope = 0.01;
    std::size_t threads = 1;
};

void validate(const TrainConfig& config);
DiffusionConfig diffusion_config(const TrainConfig& config);

struct BatchResult {
    double mean_loss = 0.0;  // over users with a defined loss
    double loss_sum = 0.0;
    std::size_t users_used = 0;
    std::size_t users_skipped = 0;      // no positive among the candidates
    std::size_t positives_skipped = 0;  // positives without a candidate score
    ModelParams gradients;              // of mean_loss
};

// `sample_seed` drives negative sampling when config.contrastive is set.
BatchResult forward_backward(std::span<const EntityId> users, const ModelParams& model, const KnowledgeGraph& graph,
                             const InteractionSet& train, const TrainConfig& config, std::uint64_t sample_seed = 0);

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig config;
    ModelParams first_moment;
    ModelParams second_moment;
    std::uint64_t step = 0;

    static AdamState for_model(const ModelParams& model, AdamConfig config);
};

// Bias-corrected Adam. Throws NumericError, leaving model and state
// untouched, if any gradient entry is non-finite.
void adam_step(ModelParams& model, const ModelParams& gradients, AdamState& state);

struct TrainHistory {
    std::vector<double> epoch_loss;
    std::vector<std::size_t> epoch_users_skipped;
};

// Initializes W1..W4 from config.seed, fine-tunes everything with Adam over
// seeded user batches, and returns a float32-precision checkpoint.
Checkpoint train(const KnowledgeGraph& graph, const EmbeddingTable& pretrained, const InteractionSet& interactions,
                 const TrainConfig& config, TrainHistory* history = nullptr);

}  // namespace kgsr
