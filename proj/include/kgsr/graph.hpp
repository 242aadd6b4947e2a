// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
//
// In-memory knowledge graph over typed entities (User / Item / Property).
//
// Entities and relations are interned to dense ids starting at 0. Triples are
// stored with set semantics, and every triple is indexed twice: a Forward
// entry at its head and an Inverse entry at its tail, both reusing the same
// relation id. Adjacency lists stay sorted by (neighbor, relation, direction)
// so traversal order is deterministic.
#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace kgsr {

enum class EntityId : std::uint32_t {};
enum class RelationId : std::uint32_t {};

constexpr std::uint32_t index(EntityId e) { return static_cast<std::uint32_t>(e); }
constexpr std::uint32_t index(RelationId r) { return static_cast<std::uint32_t>(r); }

enum class EntityKind : std::uint8_t { User, Item, Property };
enum class Direction : std::uint8_t { Forward, Inverse };

std::string_view to_string(EntityKind kind);
EntityKind parse_kind(std::string_view text);  // throws ParseError

struct Triple {
    EntityId head;
    RelationId relation;
    EntityId tail;

    friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleHash {
    std::size_t operator()(const Triple& t) const noexcept {
        std::uint64_t h = index(t.head);
        h = h * 0x9E3779B97F4A7C15ULL ^ index(t.relation);
        h = h * 0x9E3779B97F4A7C15ULL ^ index(t.tail);
        return static_cast<std::size_t>(h ^ (h >> 29));
    }
};

struct Neighbor {
    RelationId relation;
    EntityId entity;
    Direction direction;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

class KnowledgeGraph {
public:
    // Returns the existing id when the name is already interned with the same
    // kind; throws ConsistencyError when it is interned with another kind.
    EntityId intern_entity(std::string_view name, EntityKind kind);
    RelationId intern_relation(std::string_view name);

    std::optional<EntityId> find_entity(std::string_view name) const;
    std::optional<RelationId> find_relation(std::string_view name) const;
    EntityId entity(std::string_view name) const;      // throws NotFoundError
    RelationId relation(std::string_view name) const;  // throws NotFoundError

    // Adds a triple; returns false if it was already present. Self-loops are
    // rejected with ArgumentError.
    bool add_triple(const Triple& triple);
    bool add_triple(std::string_view head, EntityKind head_kind, std::string_view relation,
                    std::string_view tail, EntityKind tail_kind);

    bool contains(const Triple& triple) const { return triple_set_.contains(triple); }

    // Sorted by (neighbor id, relation id, direction). Throws NotFoundError for
    // an unknown id.
    std::span<const Neighbor> neighbors(EntityId entity) const;

    bool has_entity(EntityId e) const { return index(e) < entities_.size(); }
    bool has_relation(RelationId r) const { return index(r) < relations_.size(); }

    std::size_t entity_count() const { return entities_.size(); }
    std::size_t relation_count() const { return relations_.size(); }
    std::size_t triple_count() const { return triples_.size(); }

    const std::string& entity_name(EntityId e) const;
    EntityKind kind(EntityId e) const;
    const std::string& relation_name(RelationId r) const;

    // Insertion order.
    const std::vector<Triple>& triples() const { return triples_; }
    std::vector<EntityId> entities_of_kind(EntityKind kind) const;

private:
    struct EntityRecord {
        std::string name;
        EntityKind kind;
    };

    void check_entity(EntityId e) const;

    std::vector<EntityRecord> entities_;
    std::unordered_map<std::string, EntityId> entity_index_;
    std::vector<std::string> relations_;
    std::unordered_map<std::string, RelationId> relation_index_;
    std::vector<Triple> triples_;
    std::unordered_set<Triple, TripleHash> triple_set_;
    std::vector<std::vector<Neighbor>> adjacency_;
};

// Triples file: UTF-8, tab separated, five fields per line
//   head_name  head_kind  relation_name  tail_name  tail_kind
// kinds are user | item | property; lines starting with '#' and blank lines
// are skipped.
KnowledgeGraph read_triples(std::istream& in);
void read_triples_into(std::istream& in, KnowledgeGraph& graph);
KnowledgeGraph ingest_triples(const std::filesystem::path& path);
void write_triples(const KnowledgeGraph& graph, std::ostream& out);
void save_triples(const KnowledgeGraph& graph, const std::filesystem::path& path);

}  // namespace kgsr
