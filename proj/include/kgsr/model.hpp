// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kgsr/diffusion.hpp"
#include "kgsr/embedding.hpp"
#include "kgsr/graph.hpp"
#include "kgsr/scorer.hpp"

namespace kgsr {

struct ModelParams {
    AttentionParams attention;
    EncoderParams encoder;
    EmbeddingTable embeddings;

    std::size_t dim() const { return embeddings.dim(); }
    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Every parameter block in a fixed order: W1, W2, W3, W4, entities, relations.
std::vector<std::span<double>> parameter_blocks(ModelParams& model);
std::vector<std::span<const double>> parameter_blocks(const ModelParams& model);

// Same shapes, all zeros.
ModelParams zeros_like(const ModelParams& model);

void check_shapes(const ModelParams& model);

// W1..W4 drawn uniformly from +-sqrt(6 / (fan_in + fan_out)) with a seeded
// generator; the embedding table is copied. Hidden widths of 0 mean "use d".
ModelParams init_model(const EmbeddingTable& embeddings, std::size_t attention_hidden, std::size_t encoder_hidden,
                       std::uint64_t seed);

// On-disk model. All values are held at float32 precision so that a saved
// and reloaded checkpoint evaluates bit-identically to the in-memory one.
struct Checkpoint {
    ModelParams model;
    std::vector<std::string> entity_names;
    std::vector<std::string> relation_names;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

Checkpoint make_checkpoint(const ModelParams& model, const KnowledgeGraph& graph);

// Throws ArgumentError unless sizes and names line up with the graph.
void check_compatible(const Checkpoint& checkpoint, const KnowledgeGraph& graph);

// Layout (all integers little-endian):
//   "KGSR" | u32 version | u32 d, d1, d2, |E|, |R|
//   W1, W2, W3, W4, entity matrix, relation matrix as row-major f32
//   |E| + |R| names, each u32 byte length + UTF-8 bytes
//   u64 FNV-1a checksum of every preceding byte
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace kgsr
