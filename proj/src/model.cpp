// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#include "kgsr/model.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>

#include "kgsr/error.hpp"
#include "kgsr/rng.hpp"

namespace kgsr {

std::vector<std::span<double>> parameter_blocks(ModelParams& model) {
    return {model.attention.w1.values(), model.attention.w2.values(), model.encoder.w3.values(),
            model.encoder.w4.values(),   model.embeddings.entities().values(),
            model.embeddings.relations().values()};
}

std::vector<std::span<const double>> parameter_blocks(const ModelParams& model) {
    return {model.attention.w1.values(), model.attention.w2.values(), model.encoder.w3.values(),
            model.encoder.w4.values(),   model.embeddings.entities().values(),
            model.embeddings.relations().values()};
}

ModelParams zeros_like(const ModelParams& model) {
    ModelParams out;
    out.attention.w1 = Matrix(model.attention.w1.rows(), model.attention.w1.cols());
    out.attention.w2 = Matrix(model.attention.w2.rows(), model.attention.w2.cols());
    out.encoder.w3 = Matrix(model.encoder.w3.rows(), model.encoder.w3.cols());
    out.encoder.w4 = Matrix(model.encoder.w4.rows(), model.encoder.w4.cols());
    out.embeddings = EmbeddingTable(model.embeddings.entity_count(), model.embeddings.relation_count(), model.dim());
    return out;
}

void check_shapes(const ModelParams& model) {
    if (model.dim() == 0) throw ArgumentError("model: embedding dimension is zero");
    check_shapes(model.attention, model.dim());
    check_shapes(model.encoder, model.dim());
}

namespace {

void glorot_uniform(Matrix& m, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    for (double& v : m.values()) v = rng.uniform(-bound, bound);
}

}  // namespace

ModelParams init_model(const EmbeddingTable& embeddings, std::size_t attention_hidden, std::size_t encoder_hidden,
                       std::uint64_t seed) {
    const auto d = embeddings.dim();
    if (d == 0) throw ArgumentError("init_model: embedding dimension is zero");
    const auto d1 = attention_hidden == 0 ? d : attention_hidden;
    const auto d2 = encoder_hidden == 0 ? d : encoder_hidden;
    ModelParams model;
    model.attention.w1 = Matrix(d1, 2 * d);
    model.attention.w2 = Matrix(d, d1);
    model.encoder.w3 = Matrix(d2, 3 * d);
    model.encoder.w4 = Matrix(d, d2);
    model.embeddings = embeddings;
    Rng rng(seed);
    glorot_uniform(model.attention.w1, rng);
    glorot_uniform(model.attention.w2, rng);
    glorot_uniform(model.encoder.w3, rng);
    glorot_uniform(model.encoder.w4, rng);
    return model;
}

Checkpoint make_checkpoint(const ModelParams& model, const KnowledgeGraph& graph) {
    check_shapes(model);
    if (!model.embeddings.matches(graph)) throw ArgumentError("checkpoint: embedding table does not match the graph");
    Checkpoint ckpt;
    ckpt.model = model;
    for (auto block : parameter_blocks(ckpt.model)) {
        for (double& v : block) v = static_cast<double>(static_cast<float>(v));
    }
    ckpt.entity_names.reserve(graph.entity_count());
    for (std::size_t i = 0; i < graph.entity_count(); ++i) {
        ckpt.entity_names.push_back(graph.entity_name(static_cast<EntityId>(i)));
    }
    ckpt.relation_names.reserve(graph.relation_count());
    for (std::size_t i = 0; i < graph.relation_count(); ++i) {
        ckpt.relation_names.push_back(graph.relation_name(static_cast<RelationId>(i)));
    }
    return ckpt;
}

void check_compatible(const Checkpoint& checkpoint, const KnowledgeGraph& graph) {
    if (checkpoint.entity_names.size() != graph.entity_count() ||
        checkpoint.relation_names.size() != graph.relation_count()) {
        throw ArgumentError("checkpoint has " + std::to_string(checkpoint.entity_names.size()) + " entities / " +
                            std::to_string(checkpoint.relation_names.size()) + " relations but the graph has " +
                            std::to_string(graph.entity_count()) + " / " + std::to_string(graph.relation_count()));
    }
    for (std::size_t i = 0; i < graph.entity_count(); ++i) {
        if (checkpoint.entity_names[i] != graph.entity_name(static_cast<EntityId>(i))) {
            throw ArgumentError("checkpoint entity " + std::to_string(i) + " is '" + checkpoint.entity_names[i] +
                                "' but the graph has '" + graph.entity_name(static_cast<EntityId>(i)) + "'");
        }
    }
    for (std::size_t i = 0; i < graph.relation_count(); ++i) {
        if (checkpoint.relation_names[i] != graph.relation_name(static_cast<RelationId>(i))) {
            throw ArgumentError("checkpoint relation " + std::to_string(i) + " does not match the graph");
        }
    }
}

namespace {

constexpr std::uint8_t kMagic[4] = {'K', 'G', 'S', 'R'};

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Writer {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
    void raw(std::span<const std::uint8_t> data) { bytes_.insert(bytes_.end(), data.begin(), data.end()); }
    void matrix(const Matrix& m) {
        for (double v : m.values()) f32(v);
    }
    void name(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
    }
    std::vector<std::uint8_t>& bytes() { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    Matrix matrix(std::size_t rows, std::size_t cols) {
        // Reject sizes the buffer cannot possibly hold before allocating.
        if (cols != 0 && rows > remaining() / 4 / cols) throw CorruptionError("checkpoint truncated inside a matrix");
        Matrix m(rows, cols);
        for (double& v : m.values()) v = static_cast<double>(std::bit_cast<float>(u32()));
        return m;
    }
    std::string name() {
        const auto len = u32();
        need(len);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
        pos_ += len;
        return s;
    }
    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (remaining() < n) throw CorruptionError("checkpoint truncated");
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
    const auto& m = ckpt.model;
    check_shapes(m);
    if (ckpt.entity_names.size() != m.embeddings.entity_count() ||
        ckpt.relation_names.size() != m.embeddings.relation_count()) {
        throw ArgumentError("checkpoint name tables do not match the embedding table");
    }
    Writer w;
    w.raw(kMagic);
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(m.dim()));
    w.u32(static_cast<std::uint32_t>(m.attention.hidden()));
    w.u32(static_cast<std::uint32_t>(m.encoder.hidden()));
    w.u32(static_cast<std::uint32_t>(m.embeddings.entity_count()));
    w.u32(static_cast<std::uint32_t>(m.embeddings.relation_count()));
    w.matrix(m.attention.w1);
    w.matrix(m.attention.w2);
    w.matrix(m.encoder.w3);
    w.matrix(m.encoder.w4);
    w.matrix(m.embeddings.entities());
    w.matrix(m.embeddings.relations());
    for (const auto& n : ckpt.entity_names) w.name(n);
    for (const auto& n : ckpt.relation_names) w.name(n);
    w.u64(fnv1a(w.bytes()));
    return std::move(w.bytes());
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) throw CorruptionError("checkpoint truncated before the magic bytes");
    if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
        throw FormatError("not a checkpoint: bad magic bytes");
    }
    Reader r(bytes.subspan(4));
    const auto version = r.u32();
    if (version != kCheckpointVersion) {
        throw VersionError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                           std::to_string(kCheckpointVersion) + ")");
    }
    const std::size_t d = r.u32();
    const std::size_t d1 = r.u32();
    const std::size_t d2 = r.u32();
    const std::size_t entities = r.u32();
    const std::size_t relations = r.u32();

    Checkpoint ckpt;
    auto& m = ckpt.model;
    m.attention.w1 = r.matrix(d1, 2 * d);
    m.attention.w2 = r.matrix(d, d1);
    m.encoder.w3 = r.matrix(d2, 3 * d);
    m.encoder.w4 = r.matrix(d, d2);
    m.embeddings = EmbeddingTable(entities, relations, d);
    m.embeddings.entities() = r.matrix(entities, d);
    m.embeddings.relations() = r.matrix(relations, d);
    for (std::size_t i = 0; i < entities; ++i) ckpt.entity_names.push_back(r.name());
    for (std::size_t i = 0; i < relations; ++i) ckpt.relation_names.push_back(r.name());

    const auto body_end = 4 + r.position();
    const auto stored = r.u64();
    if (r.remaining() != 0) throw CorruptionError("checkpoint has trailing bytes");
    if (stored != fnv1a(bytes.first(body_end))) throw CorruptionError("checkpoint checksum mismatch");
    try {
        check_shapes(m);
    } catch (const ArgumentError& e) {
        throw CorruptionError(std::string("checkpoint shapes are inconsistent: ") + e.what());
    }
    return ckpt;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(checkpoint);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

}  // namespace kgsr
