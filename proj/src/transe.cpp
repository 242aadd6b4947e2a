// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#include "kgsr/transe.hpp"

#include <cmath>
#include <numeric>

#include "kgsr/error.hpp"

namespace kgsr {

namespace {

constexpr int kMaxNegativeRetries = 32;

void check_triple(const EmbeddingTable& table, const Triple& t) {
    if (index(t.head) >= table.entity_count() || index(t.tail) >= table.entity_count()) {
        throw NotFoundError("triple references an entity outside the embedding table");
    }
    if (index(t.relation) >= table.relation_count()) {
        throw NotFoundError("triple references a relation outside the embedding table");
    }
}

// residual = h + r - t
Vector residual(const EmbeddingTable& table, const Triple& t) {
    const auto h = table.entity(t.head);
    const auto r = table.relation(t.relation);
    const auto tail = table.entity(t.tail);
    Vector out(table.dim());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = h[i] + r[i] - tail[i];
    return out;
}

double norm_of(const Vector& v, Norm norm) {
    if (norm == Norm::L1) {
        double s = 0.0;
        for (double x : v) s += std::abs(x);
        return s;
    }
    return std::sqrt(dot(v, v));
}

// d||res|| / d res
Vector norm_gradient(const Vector& res, Norm norm) {
    Vector g(res.size(), 0.0);
    if (norm == Norm::L1) {
        for (std::size_t i = 0; i < res.size(); ++i) g[i] = res[i] > 0 ? 1.0 : (res[i] < 0 ? -1.0 : 0.0);
        return g;
    }
    const double n = std::sqrt(dot(res, res));
    if (n == 0.0) return g;
    for (std::size_t i = 0; i < res.size(); ++i) g[i] = res[i] / n;
    return g;
}

// Adds scale * d(score)/d(params) for one triple.
void accumulate_score_gradient(const EmbeddingTable& table, const Triple& t, Norm norm, double scale,
                               EmbeddingTable& grad) {
    const auto g = norm_gradient(residual(table, t), norm);
    axpy(scale, g, grad.entity(t.head));
    axpy(scale, g, grad.relation(t.relation));
    axpy(-scale, g, grad.entity(t.tail));
}

void init_uniform(Matrix& m, double bound, Rng& rng) {
    for (double& v : m.values()) v = rng.uniform(-bound, bound);
}

void normalize_rows(Matrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        const double n = std::sqrt(dot(row, row));
        if (n > 0.0) {
            for (double& v : row) v /= n;
        }
    }
}

}  // namespace

void validate(const TranseConfig& config) {
    if (config.dim == 0) throw ArgumentError("transe: dim must be positive");
    if (!(config.margin > 0.0)) throw ArgumentError("transe: margin must be positive");
    if (!(config.learning_rate > 0.0)) throw ArgumentError("transe: learning rate must be positive");
    if (config.epochs < 1) throw ArgumentError("transe: epochs must be at least 1");
    if (config.negatives < 1) throw ArgumentError("transe: negatives per positive must be at least 1");
    if (config.norm != Norm::L1 && config.norm != Norm::L2) throw ArgumentError("transe: norm must be 1 or 2");
}

double transe_score(const EmbeddingTable& table, const Triple& triple, Norm norm) {
    check_triple(table, triple);
    return norm_of(residual(table, triple), norm);
}

Triple sample_negative(const KnowledgeGraph& graph, const Triple& triple, Rng& rng) {
    const auto n = graph.entity_count();
    if (n < 2) throw ArgumentError("negative sampling needs at least 2 entities");
    Triple candidate = triple;
    for (int attempt = 0; attempt <= kMaxNegativeRetries; ++attempt) {
        candidate = triple;
        const bool corrupt_head = rng.coin();
        const auto original = corrupt_head ? triple.head : triple.tail;
        // Draw from the n - 1 entities other than the one being replaced.
        auto drawn = static_cast<std::uint32_t>(rng.below(n - 1));
        if (drawn >= index(original)) ++drawn;
        (corrupt_head ? candidate.head : candidate.tail) = static_cast<EntityId>(drawn);
        if (!graph.contains(candidate)) return candidate;
    }
    return candidate;
}

double margin_loss(const EmbeddingTable& table, const Triple& positive, const Triple& negative,
                   double margin, Norm norm) {
    return std::max(0.0, margin + transe_score(table, positive, norm) - transe_score(table, negative, norm));
}

void margin_loss_gradient(const EmbeddingTable& table, const Triple& positive, const Triple& negative,
                          double margin, Norm norm, EmbeddingTable& grad) {
    if (margin_loss(table, positive, negative, margin, norm) <= 0.0) return;
    accumulate_score_gradient(table, positive, norm, 1.0, grad);
    accumulate_score_gradient(table, negative, norm, -1.0, grad);
}

void normalize_entity_rows(EmbeddingTable& table) { normalize_rows(table.entities()); }

EmbeddingTable transe_pretrain(const KnowledgeGraph& graph, const TranseConfig& config, TranseHistory* history) {
    validate(config);
    if (graph.triple_count() == 0) throw ArgumentError("transe: graph has no triples");
    if (graph.entity_count() < 2) throw ArgumentError("transe: graph needs at least 2 entities");

    Rng rng(config.seed);
    EmbeddingTable table(graph.entity_count(), graph.relation_count(), config.dim);
    const double bound = 6.0 / std::sqrt(static_cast<double>(config.dim));
    init_uniform(table.entities(), bound, rng);
    init_uniform(table.relations(), bound, rng);
    normalize_rows(table.relations());
    normalize_entity_rows(table);

    const auto& triples = graph.triples();
    auto mean_positive = [&] {
        double sum = 0.0;
        for (const auto& t : triples) sum += transe_score(table, t, config.norm);
        return sum / static_cast<double>(triples.size());
    };
    if (history) {
        history->mean_loss.clear();
        history->mean_positive_score.assign(1, mean_positive());
    }

    std::vector<std::size_t> order(triples.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double loss_sum = 0.0;
        std::size_t pairs = 0;
        for (auto idx : order) {
            const auto& pos = triples[idx];
            for (int k = 0; k < config.negatives; ++k) {
                const auto neg = sample_negative(graph, pos, rng);
                const double loss = margin_loss(table, pos, neg, config.margin, config.norm);
                loss_sum += loss;
                ++pairs;
                if (loss <= 0.0) continue;
                // Sparse SGD step on the five touched rows.
                const auto gp = norm_gradient(residual(table, pos), config.norm);
                const auto gn = norm_gradient(residual(table, neg), config.norm);
                const double lr = config.learning_rate;
                axpy(-lr, gp, table.entity(pos.head));
                axpy(-lr, gp, table.relation(pos.relation));
                axpy(lr, gp, table.entity(pos.tail));
                axpy(lr, gn, table.entity(neg.head));
                axpy(lr, gn, table.relation(neg.relation));
                axpy(-lr, gn, table.entity(neg.tail));
            }
        }
        normalize_entity_rows(table);
        if (history) {
            history->mean_loss.push_back(loss_sum / static_cast<double>(pairs));
            history->mean_positive_score.push_back(mean_positive());
        }
    }
    return table;
}

}  // namespace kgsr
