// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#include "kgsr/interactions.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "kgsr/error.hpp"
#include "kgsr/rng.hpp"
#include "text.hpp"

namespace kgsr {

bool InteractionSet::add(EntityId user, EntityId item) {
    auto& list = by_user_[user];
    if (std::find(list.begin(), list.end(), item) != list.end()) return false;
    list.push_back(item);
    ++pair_count_;
    return true;
}

bool InteractionSet::contains(EntityId user, EntityId item) const {
    auto it = by_user_.find(user);
    if (it == by_user_.end()) return false;
    return std::find(it->second.begin(), it->second.end(), item) != it->second.end();
}

std::span<const EntityId> InteractionSet::items(EntityId user) const {
    auto it = by_user_.find(user);
    if (it == by_user_.end()) return {};
    return it->second;
}

std::vector<EntityId> InteractionSet::users() const {
    std::vector<EntityId> out;
    out.reserve(by_user_.size());
    for (const auto& [user, _] : by_user_) out.push_back(user);
    return out;
}

InteractionSet read_interactions(std::istream& in, const KnowledgeGraph& graph) {
    InteractionSet set;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split_tabs(line);
        const auto where = "interactions line " + std::to_string(line_no) + ": ";
        if (fields.size() != 2) {
            throw ParseError(where + "expected 2 fields, got " + std::to_string(fields.size()));
        }
        const auto user = graph.find_entity(fields[0]);
        if (!user) throw ReferenceError(where + "unknown user '" + fields[0] + "'");
        const auto item = graph.find_entity(fields[1]);
        if (!item) throw ReferenceError(where + "unknown item '" + fields[1] + "'");
        if (graph.kind(*user) != EntityKind::User) {
            throw KindError(where + "'" + fields[0] + "' is a " + std::string(to_string(graph.kind(*user))) +
                            ", not a user");
        }
        if (graph.kind(*item) != EntityKind::Item) {
            throw KindError(where + "'" + fields[1] + "' is a " + std::string(to_string(graph.kind(*item))) +
                            ", not an item");
        }
        set.add(*user, *item);
    }
    return set;
}

InteractionSet ingest_interactions(const std::filesystem::path& path, const KnowledgeGraph& graph) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open interactions file " + path.string());
    return read_interactions(in, graph);
}

void write_interactions(const InteractionSet& set, const KnowledgeGraph& graph, std::ostream& out) {
    for (const auto& [user, items] : set.by_user()) {
        for (auto item : items) out << graph.entity_name(user) << '\t' << graph.entity_name(item) << '\n';
    }
}

void save_interactions(const InteractionSet& set, const KnowledgeGraph& graph,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write interactions file " + path.string());
    write_interactions(set, graph, out);
}

InteractionSplit split_interactions(const InteractionSet& set, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
        throw ArgumentError("train fraction must lie in (0, 1]");
    }
    InteractionSplit split;
    Rng rng(seed);
    for (const auto& [user, items] : set.by_user()) {
        std::vector<EntityId> order(items.begin(), items.end());
        rng.shuffle(std::span<EntityId>(order));
        std::size_t keep = order.size();
        if (order.size() >= 2) {
            // The epsilon absorbs products like 0.8 * 5 landing just below 4.
            const auto floor_count = static_cast<std::size_t>(std::floor(train_fraction * order.size() + 1e-9));
            keep = std::clamp<std::size_t>(floor_count, 1, order.size());
        }
        for (std::size_t i = 0; i < order.size(); ++i) {
            (i < keep ? split.train : split.test).add(user, order[i]);
        }
    }
    return split;
}

}  // namespace kgsr
