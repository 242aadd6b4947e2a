// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#pragma once

#include <cstddef>
#include <span>

#include "kgsr/graph.hpp"
#include "kgsr/linalg.hpp"

namespace kgsr {

// d-dimensional vectors for every entity and relation of one graph.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::size_t entity_count, std::size_t relation_count, std::size_t dim)
        : entities_(entity_count, dim), relations_(relation_count, dim), dim_(dim) {}

    std::size_t dim() const { return dim_; }
    std::size_t entity_count() const { return entities_.rows(); }
    std::size_t relation_count() const { return relations_.rows(); }

    std::span<double> entity(EntityId e) { return entities_.row(index(e)); }
    std::span<const double> entity(EntityId e) const { return entities_.row(index(e)); }
    std::span<double> relation(RelationId r) { return relations_.row(index(r)); }
    std::span<const double> relation(RelationId r) const { return relations_.row(index(r)); }

    Matrix& entities() { return entities_; }
    const Matrix& entities() const { return entities_; }
    Matrix& relations() { return relations_; }
    const Matrix& relations() const { return relations_; }

    bool matches(const KnowledgeGraph& graph) const {
        return entity_count() == graph.entity_count() && relation_count() == graph.relation_count();
    }

    friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

private:
    Matrix entities_;
    Matrix relations_;
    std::size_t dim_ = 0;
};

}  // namespace kgsr
