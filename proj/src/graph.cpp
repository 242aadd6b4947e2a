// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#include "kgsr/graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "kgsr/error.hpp"
#include "text.hpp"

namespace kgsr {

std::string_view to_string(EntityKind kind) {
    switch (kind) {
        case EntityKind::User: return "user";
        case EntityKind::Item: return "item";
        case EntityKind::Property: return "property";
    }
    return "?";
}

EntityKind parse_kind(std::string_view text) {
    if (text == "user") return EntityKind::User;
    if (text == "item") return EntityKind::Item;
    if (text == "property") return EntityKind::Property;
    throw ParseError("unknown entity kind '" + std::string(text) + "'");
}

EntityId KnowledgeGraph::intern_entity(std::string_view name, EntityKind kind) {
    if (name.empty()) throw ArgumentError("entity name must be nonempty");
    if (name.find_first_of("\t\n") != std::string_view::npos) {
        throw ArgumentError("entity name contains a tab or newline");
    }
    if (auto it = entity_index_.find(std::string(name)); it != entity_index_.end()) {
        const auto& record = entities_[index(it->second)];
        if (record.kind != kind) {
            throw ConsistencyError("entity '" + record.name + "' declared as " +
                                   std::string(to_string(record.kind)) + " and as " +
                                   std::string(to_string(kind)));
        }
        return it->second;
    }
    const auto id = static_cast<EntityId>(entities_.size());
    entities_.push_back({std::string(name), kind});
    entity_index_.emplace(std::string(name), id);
    adjacency_.emplace_back();
    return id;
}

RelationId KnowledgeGraph::intern_relation(std::string_view name) {
    if (name.empty()) throw ArgumentError("relation name must be nonempty");
    if (auto it = relation_index_.find(std::string(name)); it != relation_index_.end()) {
        return it->second;
    }
    const auto id = static_cast<RelationId>(relations_.size());
    relations_.emplace_back(name);
    relation_index_.emplace(std::string(name), id);
    return id;
}

std::optional<EntityId> KnowledgeGraph::find_entity(std::string_view name) const {
    if (auto it = entity_index_.find(std::string(name)); it != entity_index_.end()) return it->second;
    return std::nullopt;
}

std::optional<RelationId> KnowledgeGraph::find_relation(std::string_view name) const {
    if (auto it = relation_index_.find(std::string(name)); it != relation_index_.end()) return it->second;
    return std::nullopt;
}

EntityId KnowledgeGraph::entity(std::string_view name) const {
    if (auto id = find_entity(name)) return *id;
    throw NotFoundError("unknown entity '" + std::string(name) + "'");
}

RelationId KnowledgeGraph::relation(std::string_view name) const {
    if (auto id = find_relation(name)) return *id;
    throw NotFoundError("unknown relation '" + std::string(name) + "'");
}

namespace {

bool neighbor_less(const Neighbor& a, const Neighbor& b) {
    if (a.entity != b.entity) return a.entity < b.entity;
    if (a.relation != b.relation) return a.relation < b.relation;
    return a.direction < b.direction;
}

void insert_sorted(std::vector<Neighbor>& list, Neighbor entry) {
    auto pos = std::upper_bound(list.begin(), list.end(), entry, neighbor_less);
    list.insert(pos, entry);
}

}  // namespace

bool KnowledgeGraph::add_triple(const Triple& triple) {
    check_entity(triple.head);
    check_entity(triple.tail);
    if (!has_relation(triple.relation)) {
        throw NotFoundError("unknown relation id " + std::to_string(index(triple.relation)));
    }
    if (triple.head == triple.tail) {
        throw ArgumentError("self-loop on entity '" + entity_name(triple.head) + "'");
    }
    if (!triple_set_.insert(triple).second) return false;
    triples_.push_back(triple);
    insert_sorted(adjacency_[index(triple.head)], {triple.relation, triple.tail, Direction::Forward});
    insert_sorted(adjacency_[index(triple.tail)], {triple.relation, triple.head, Direction::Inverse});
    return true;
}

bool KnowledgeGraph::add_triple(std::string_view head, EntityKind head_kind, std::string_view relation,
                                std::string_view tail, EntityKind tail_kind) {
    const auto h = intern_entity(head, head_kind);
    const auto t = intern_entity(tail, tail_kind);
    const auto r = intern_relation(relation);
    return add_triple(Triple{h, r, t});
}

std::span<const Neighbor> KnowledgeGraph::neighbors(EntityId entity) const {
    check_entity(entity);
    return adjacency_[index(entity)];
}

const std::string& KnowledgeGraph::entity_name(EntityId e) const {
    check_entity(e);
    return entities_[index(e)].name;
}

EntityKind KnowledgeGraph::kind(EntityId e) const {
    check_entity(e);
    return entities_[index(e)].kind;
}

const std::string& KnowledgeGraph::relation_name(RelationId r) const {
    if (!has_relation(r)) throw NotFoundError("unknown relation id " + std::to_string(index(r)));
    return relations_[index(r)];
}

std::vector<EntityId> KnowledgeGraph::entities_of_kind(EntityKind kind) const {
    std::vector<EntityId> out;
    for (std::size_t i = 0; i < entities_.size(); ++i) {
        if (entities_[i].kind == kind) out.push_back(static_cast<EntityId>(i));
    }
    return out;
}

void KnowledgeGraph::check_entity(EntityId e) const {
    if (!has_entity(e)) throw NotFoundError("unknown entity id " + std::to_string(index(e)));
}

void read_triples_into(std::istream& in, KnowledgeGraph& graph) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 5) {
            throw ParseError("triples line " + std::to_string(line_no) + ": expected 5 fields, got " +
                             std::to_string(fields.size()));
        }
        try {
            graph.add_triple(fields[0], parse_kind(fields[1]), fields[2], fields[3], parse_kind(fields[4]));
        } catch (const ParseError& e) {
            throw ParseError("triples line " + std::to_string(line_no) + ": " + e.what());
        } catch (const ConsistencyError& e) {
            throw ConsistencyError("triples line " + std::to_string(line_no) + ": " + e.what());
        } catch (const ArgumentError& e) {
            throw ParseError("triples line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

KnowledgeGraph read_triples(std::istream& in) {
    KnowledgeGraph graph;
    read_triples_into(in, graph);
    return graph;
}

KnowledgeGraph ingest_triples(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open triples file " + path.string());
    return read_triples(in);
}

void write_triples(const KnowledgeGraph& graph, std::ostream& out) {
    for (const auto& t : graph.triples()) {
        out << graph.entity_name(t.head) << '\t' << to_string(graph.kind(t.head)) << '\t'
            << graph.relation_name(t.relation) << '\t' << graph.entity_name(t.tail) << '\t'
            << to_string(graph.kind(t.tail)) << '\n';
    }
}

void save_triples(const KnowledgeGraph& graph, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write triples file " + path.string());
    write_triples(graph, out);
}

}  // namespace kgsr
