// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#include "kgsr/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "kgsr/error.hpp"

namespace kgsr {

void check_shapes(const EncoderParams& params, std::size_t dim) {
    const auto hidden = params.w3.rows();
    if (hidden == 0 || params.w3.cols() != 3 * dim || params.w4.rows() != dim || params.w4.cols() != hidden) {
        throw ArgumentError("encoder parameters do not match embedding dimension " + std::to_string(dim));
    }
}

Vector hop_embedding(const SubgraphState& subgraph, std::size_t step, const EmbeddingTable& embeddings) {
    if (step == 0 || step > subgraph.steps.size()) {
        throw ArgumentError("hop_embedding: step " + std::to_string(step) + " outside 1.." +
                            std::to_string(subgraph.steps.size()));
    }
    Vector sum(embeddings.dim(), 0.0);
    for (auto node : subgraph.steps[step - 1].nodes) axpy(1.0, embeddings.entity(node), sum);
    return sum;
}

EncoderActivation encode_user_subgraph_traced(const EncoderParams& encoder, std::span<const double> h_user,
                                              std::span<const double> h_g1, std::span<const double> h_g2,
                                              double slope) {
    if (h_g1.size() != h_user.size() || h_g2.size() != h_user.size()) {
        throw ArgumentError("encode_user_subgraph: inputs differ in dimension");
    }
    check_shapes(encoder, h_user.size());
    EncoderActivation act;
    act.input = concat({h_user, h_g1, h_g2});
    act.hidden_pre = matvec(encoder.w3, act.input);
    act.hidden.resize(act.hidden_pre.size());
    for (std::size_t i = 0; i < act.hidden.size(); ++i) act.hidden[i] = leaky_relu(act.hidden_pre[i], slope);
    act.output = matvec(encoder.w4, act.hidden);
    return act;
}

Vector encode_user_subgraph(const EncoderParams& encoder, std::span<const double> h_user,
                            std::span<const double> h_g1, std::span<const double> h_g2, double slope) {
    return encode_user_subgraph_traced(encoder, h_user, h_g1, h_g2, slope).output;
}

double similarity(std::span<const double> user_repr, std::span<const double> item_embedding) {
    if (user_repr.size() != item_embedding.size()) throw ArgumentError("similarity: dimension mismatch");
    return sigmoid(dot(user_repr, item_embedding));
}

std::vector<BridgedItem> candidate_items(const SubgraphState& subgraph, const KnowledgeGraph& graph) {
    if (subgraph.steps.empty() || subgraph.steps.back().nodes.empty()) return {};

    std::unordered_set<std::uint32_t> members{index(subgraph.user)};
    for (const auto& step : subgraph.steps) {
        for (auto n : step.nodes) members.insert(index(n));
    }

    std::map<EntityId, BridgedItem> found;
    for (std::size_t s = 0; s < subgraph.steps.size(); ++s) {
        const auto& step = subgraph.steps[s];
        for (std::size_t i = 0; i < step.nodes.size(); ++i) {
            if (graph.kind(step.nodes[i]) != EntityKind::Item) continue;
            auto& entry = found[step.nodes[i]];
            entry.item = step.nodes[i];
            entry.weight = step.weights[i];
            entry.sources = {{s + 1, i}};
        }
    }

    const auto last = subgraph.steps.size();
    const auto& bridges = subgraph.steps.back();
    for (std::size_t i = 0; i < bridges.nodes.size(); ++i) {
        for (const auto& n : graph.neighbors(bridges.nodes[i])) {
            if (members.contains(index(n.entity)) || graph.kind(n.entity) != EntityKind::Item) continue;
            auto& entry = found[n.entity];
            entry.item = n.entity;
            // Parallel edges between the same pair count the bridge once.
            if (!entry.sources.empty() && entry.sources.back() == std::pair{last, i}) continue;
            entry.weight += bridges.weights[i];
            entry.sources.emplace_back(last, i);
        }
    }

    std::vector<BridgedItem> out;
    out.reserve(found.size());
    for (auto& [_, entry] : found) out.push_back(std::move(entry));
    return out;
}

std::vector<CandidateScore> score_candidates(const SubgraphState& subgraph, const KnowledgeGraph& graph,
                                             const EmbeddingTable& embeddings, const EncoderParams& encoder,
                                             double slope) {
    const auto items = candidate_items(subgraph, graph);
    if (items.empty()) return {};

    const auto h_user = embeddings.entity(subgraph.user);
    const Vector zero(embeddings.dim(), 0.0);
    const auto g1 = hop_embedding(subgraph, 1, embeddings);
    const auto g2 = subgraph.steps.size() >= 2 ? hop_embedding(subgraph, 2, embeddings) : zero;
    const auto repr = encode_user_subgraph(encoder, h_user, g1, g2, slope);

    std::vector<CandidateScore> out;
    out.reserve(items.size());
    for (const auto& c : items) {
        CandidateScore score;
        score.item = c.item;
        score.similarity = similarity(repr, embeddings.entity(c.item));
        score.bridge_weight = c.weight;
        score.score = c.weight * score.similarity;
        for (const auto& [s, i] : c.sources) {
            if (s == subgraph.steps.size() && subgraph.steps[s - 1].nodes[i] != c.item) {
                score.bridges.push_back(subgraph.steps[s - 1].nodes[i]);
            }
        }
        out.push_back(std::move(score));
    }
    std::sort(out.begin(), out.end(), [](const CandidateScore& a, const CandidateScore& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.item < b.item;
    });
    return out;
}

UserLoss user_loss(std::span<const CandidateScore> scores, std::span<const EntityId> positives) {
    if (positives.empty()) throw ArgumentError("user_loss: positive set is empty");
    UserLoss out;
    double sum = 0.0;
    for (auto item : positives) {
        auto it = std::find_if(scores.begin(), scores.end(), [&](const CandidateScore& c) { return c.item == item; });
        if (it == scores.end()) {
            ++out.skipped_positives;
            continue;
        }
        sum -= std::log(std::max(it->score, kLossClamp));
        ++out.used_positives;
    }
    if (out.used_positives == 0) return out;
    out.defined = true;
    out.loss = sum / static_cast<double>(out.used_positives);
    return out;
}

namespace {

// All user -> node paths along traversed edges, for a node at 1-based step s.
void paths_to(const SubgraphState& subgraph, EntityId node, std::size_t step,
              std::vector<ExplanationPath>& out) {
    if (step == 0) {
        out.push_back({{subgraph.user}, {}, 1.0});
        return;
    }
    for (const auto& e : subgraph.steps[step - 1].edges) {
        if (e.to != node) continue;
        std::vector<ExplanationPath> prefixes;
        paths_to(subgraph, e.from, step - 1, prefixes);
        for (auto& p : prefixes) {
            if (step - 1 > 0) {
                const auto [ps, pi] = subgraph.locate(e.from);
                p.weight *= subgraph.steps[ps - 1].weights[pi];
            }
            p.nodes.push_back(node);
            p.edges.push_back(e);
            out.push_back(std::move(p));
        }
    }
}

bool path_less(const ExplanationPath& a, const ExplanationPath& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    if (a.nodes != b.nodes) return a.nodes < b.nodes;
    return std::lexicographical_compare(a.edges.begin(), a.edges.end(), b.edges.begin(), b.edges.end(),
                                        [](const PathEdge& x, const PathEdge& y) {
                                            if (x.relation != y.relation) return x.relation < y.relation;
                                            return x.direction < y.direction;
                                        });
}

}  // namespace

std::vector<ExplanationPath> extract_paths(const SubgraphState& subgraph, const KnowledgeGraph& graph,
                                           EntityId item, std::size_t limit) {
    const auto candidates = candidate_items(subgraph, graph);
    auto it = std::find_if(candidates.begin(), candidates.end(), [&](const BridgedItem& c) { return c.item == item; });
    if (it == candidates.end()) {
        throw NotFoundError("extract_paths: '" + graph.entity_name(item) + "' is not a candidate for user '" +
                            graph.entity_name(subgraph.user) + "'");
    }

    std::vector<ExplanationPath> paths;
    const auto [item_step, item_pos] = subgraph.locate(item);
    if (item_step != 0) {
        paths_to(subgraph, item, item_step, paths);
    } else {
        for (const auto& [s, i] : it->sources) {
            const auto bridge = subgraph.steps[s - 1].nodes[i];
            const double bridge_weight = subgraph.steps[s - 1].weights[i];
            std::vector<ExplanationPath> prefixes;
            paths_to(subgraph, bridge, s, prefixes);
            for (const auto& n : graph.neighbors(bridge)) {
                if (n.entity != item) continue;
                for (auto p : prefixes) {
                    p.weight *= bridge_weight;
                    p.nodes.push_back(item);
                    p.edges.push_back({bridge, n.relation, n.direction, item});
                    paths.push_back(std::move(p));
                }
            }
        }
    }
    std::sort(paths.begin(), paths.end(), path_less);
    if (paths.size() > limit) paths.resize(limit);
    return paths;
}

bool validate_path(const ExplanationPath& path, const KnowledgeGraph& graph) {
    if (path.nodes.empty() || path.edges.size() + 1 != path.nodes.size()) return false;
    for (std::size_t i = 0; i < path.edges.size(); ++i) {
        const auto& e = path.edges[i];
        if (e.from != path.nodes[i] || e.to != path.nodes[i + 1]) return false;
        if (!graph.has_entity(e.from) || !graph.has_entity(e.to) || !graph.has_relation(e.relation)) return false;
        const Triple t = e.direction == Direction::Forward ? Triple{e.from, e.relation, e.to}
                                                           : Triple{e.to, e.relation, e.from};
        if (!graph.contains(t)) return false;
    }
    return true;
}

std::string serialize_path(const ExplanationPath& path, const KnowledgeGraph& graph) {
    std::string out;
    if (path.nodes.empty()) return out;
    out = graph.entity_name(path.nodes.front());
    for (const auto& e : path.edges) {
        const auto& rel = graph.relation_name(e.relation);
        out += e.direction == Direction::Forward ? " -[" + rel + "]-> " : " <-[" + rel + "]- ";
        out += graph.entity_name(e.to);
    }
    return out;
}

}  // namespace kgsr
