// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#include "kgsr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "json.hpp"

#include "kgsr/error.hpp"

namespace kgsr {

RankingMetrics evaluate_ranking(std::span<const EntityId> ranked, std::span<const EntityId> relevant, std::size_t k) {
    if (k == 0) throw ArgumentError("evaluate_ranking: K must be at least 1");
    if (relevant.empty()) throw ArgumentError("evaluate_ranking: relevant set is empty");
    std::unordered_set<std::uint32_t> wanted;
    for (auto e : relevant) wanted.insert(index(e));

    double dcg = 0.0;
    std::size_t hits = 0;
    const auto depth = std::min(k, ranked.size());
    for (std::size_t p = 0; p < depth; ++p) {
        if (wanted.contains(index(ranked[p]))) {
            dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
            ++hits;
        }
    }
    double idcg = 0.0;
    for (std::size_t p = 0; p < std::min(k, wanted.size()); ++p) idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);

    RankingMetrics m;
    m.ndcg = dcg / idcg;
    m.recall = static_cast<double>(hits) / static_cast<double>(wanted.size());
    m.hit = hits > 0 ? 1.0 : 0.0;
    m.precision = static_cast<double>(hits) / static_cast<double>(k);
    return m;
}

std::vector<EntityId> rank_catalog(std::span<const CandidateScore> scored, std::span<const EntityId> catalog,
                                   std::span<const EntityId> exclude) {
    std::unordered_set<std::uint32_t> skip;
    for (auto e : exclude) skip.insert(index(e));
    std::vector<EntityId> ranked;
    ranked.reserve(catalog.size());
    for (const auto& c : scored) {
        if (skip.insert(index(c.item)).second) ranked.push_back(c.item);
    }
    std::vector<EntityId> rest(catalog.begin(), catalog.end());
    std::sort(rest.begin(), rest.end());
    for (auto e : rest) {
        if (skip.insert(index(e)).second) ranked.push_back(e);
    }
    return ranked;
}

EvalReport evaluate_model(const Checkpoint& checkpoint, const KnowledgeGraph& graph, const InteractionSet& train,
                          const InteractionSet& test, std::size_t k, const DiffusionConfig& diffusion,
                          std::size_t threads) {
    if (k == 0) throw ArgumentError("evaluate: K must be at least 1");
    if (test.empty()) throw ArgumentError("evaluate: test set is empty");
    check_compatible(checkpoint, graph);
    validate(diffusion);
    const auto& model = checkpoint.model;
    const auto catalog = graph.entities_of_kind(EntityKind::Item);
    const auto users = test.users();

    struct PerUser {
        bool evaluated = false;
        RankingMetrics metrics;
    };
    std::vector<PerUser> results(users.size());
    auto evaluate_user = [&](std::size_t i) {
        const auto user = users[i];
        const auto sub = diffuse(graph, model.embeddings, model.attention, user, diffusion);
        const auto scores = score_candidates(sub, graph, model.embeddings, model.encoder, diffusion.slope);
        if (scores.empty()) return;
        const auto ranked = rank_catalog(scores, catalog, train.items(user));
        results[i] = {true, evaluate_ranking(ranked, test.items(user), k)};
    };

    const auto workers = std::max<std::size_t>(1, std::min(threads, users.size()));
    if (workers == 1) {
        for (std::size_t i = 0; i < users.size(); ++i) evaluate_user(i);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < users.size(); i += workers) evaluate_user(i);
            });
        }
    }

    EvalReport report;
    report.k = k;
    for (const auto& r : results) {
        if (!r.evaluated) {
            ++report.users_skipped;
            continue;
        }
        ++report.users_evaluated;
        report.ndcg += r.metrics.ndcg;
        report.recall += r.metrics.recall;
        report.hit_rate += r.metrics.hit;
        report.precision += r.metrics.precision;
    }
    if (report.users_evaluated > 0) {
        const auto n = static_cast<double>(report.users_evaluated);
        report.ndcg /= n;
        report.recall /= n;
        report.hit_rate /= n;
        report.precision /= n;
    }
    return report;
}

std::string report_json(const EvalReport& report, int indent) {
    nlohmann::ordered_json j;
    j["k"] = report.k;
    j["ndcg"] = report.ndcg;
    j["recall"] = report.recall;
    j["hit_rate"] = report.hit_rate;
    j["precision"] = report.precision;
    j["users_evaluated"] = report.users_evaluated;
    j["users_skipped"] = report.users_skipped;
    return j.dump(indent);
}

std::string report_table(std::span<const LabeledReport> rows, const std::string& label_header) {
    std::size_t label_width = label_header.size();
    for (const auto& r : rows) label_width = std::max(label_width, r.label.size());
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-*s  %4s  %9s  %9s  %9s  %9s  %9s  %7s\n", static_cast<int>(label_width),
                  label_header.c_str(), "K", "NDCG", "Recall", "HR", "Precision", "evaluated", "skipped");
    out << buf;
    for (const auto& r : rows) {
        const auto& e = r.report;
        std::snprintf(buf, sizeof buf, "%-*s  %4zu  %9.5f  %9.5f  %9.5f  %9.5f  %9zu  %7zu\n",
                      static_cast<int>(label_width), r.label.c_str(), e.k, e.ndcg, e.recall, e.hit_rate, e.precision,
                      e.users_evaluated, e.users_skipped);
        out << buf;
    }
    return out.str();
}

}  // namespace kgsr
