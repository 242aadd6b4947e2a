// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "kgsr/graph.hpp"

namespace kgsr {

// user -> purchased items Y(u), kept in first-seen order without duplicates.
class InteractionSet {
public:
    // Returns false when the pair is already present.
    bool add(EntityId user, EntityId item);

    bool contains(EntityId user, EntityId item) const;
    std::span<const EntityId> items(EntityId user) const;

    const std::map<EntityId, std::vector<EntityId>>& by_user() const { return by_user_; }
    std::vector<EntityId> users() const;

    std::size_t user_count() const { return by_user_.size(); }
    std::size_t size() const { return pair_count_; }
    bool empty() const { return pair_count_ == 0; }

    friend bool operator==(const InteractionSet&, const InteractionSet&) = default;

private:
    std::map<EntityId, std::vector<EntityId>> by_user_;
    std::size_t pair_count_ = 0;
};

// Interactions file: tab separated `user_name  item_name`. Names must already
// exist in the graph as a User and an Item respectively.
InteractionSet read_interactions(std::istream& in, const KnowledgeGraph& graph);
InteractionSet ingest_interactions(const std::filesystem::path& path, const KnowledgeGraph& graph);
void write_interactions(const InteractionSet& set, const KnowledgeGraph& graph, std::ostream& out);
void save_interactions(const InteractionSet& set, const KnowledgeGraph& graph,
                       const std::filesystem::path& path);

struct InteractionSplit {
    InteractionSet train;
    InteractionSet test;
};

// Per-user split: a user with n >= 2 items keeps max(1, floor(n * fraction))
// of a seeded shuffle in train and the rest in test; single-item users go
// entirely to train. fraction must lie in (0, 1].
InteractionSplit split_interactions(const InteractionSet& set, double train_fraction, std::uint64_t seed);

}  // namespace kgsr
