// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "kgsr/error.hpp"
#include "kgsr/model.hpp"
#include "support/random_instance.hpp"

using namespace kgsr;

namespace {

KnowledgeGraph little_graph() {
    KnowledgeGraph g;
    g.add_triple("alice", EntityKind::User, "purchase", "kettle", EntityKind::Item);
    g.add_triple("kettle", EntityKind::Item, "belong", "Brändi", EntityKind::Property);
    g.add_triple("toaster", EntityKind::Item, "belong", "Brändi", EntityKind::Property);
    return g;
}

Checkpoint random_checkpoint(const KnowledgeGraph& g, std::uint64_t seed) {
    Rng rng(seed);
    EmbeddingTable emb(g.entity_count(), g.relation_count(), 3);
    testing::fill_uniform(emb.entities(), rng, 2.0);
    testing::fill_uniform(emb.relations(), rng, 2.0);
    return make_checkpoint(init_model(emb, 4, 5, seed), g);
}

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void restamp(std::vector<std::uint8_t>& bytes) {
    const auto h = fnv1a(std::span(bytes).first(bytes.size() - 8));
    for (int i = 0; i < 8; ++i) bytes[bytes.size() - 8 + i] = static_cast<std::uint8_t>(h >> (8 * i));
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("kgsr_test_model_" + name);
}

}  // namespace

TEST_CASE("init_model shapes and bounds") {
    const auto g = little_graph();
    EmbeddingTable emb(g.entity_count(), g.relation_count(), 6);
    const auto m = init_model(emb, 0, 0, 1);
    CHECK(m.attention.w1.rows() == 6);
    CHECK(m.attention.w1.cols() == 12);
    CHECK(m.attention.w2.rows() == 6);
    CHECK(m.encoder.w3.cols() == 18);
    CHECK(m.encoder.w4.rows() == 6);
    const double bound = std::sqrt(6.0 / (6 + 12));
    for (auto v : m.attention.w1.values()) CHECK(std::abs(v) <= bound);
    CHECK(init_model(emb, 0, 0, 1) == m);
    CHECK_FALSE(init_model(emb, 0, 0, 2) == m);
}

TEST_CASE("checkpoints hold float32 values") {
    const auto c = random_checkpoint(little_graph(), 3);
    for (auto block : parameter_blocks(c.model)) {
        for (auto v : block) CHECK(static_cast<double>(static_cast<float>(v)) == v);
    }
}

TEST_CASE("encode then decode is bit identical") {
    const auto g = little_graph();
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto c = random_checkpoint(g, seed);
        const auto bytes = encode_checkpoint(c);
        const auto back = decode_checkpoint(bytes);
        CHECK(back == c);
        CHECK(encode_checkpoint(back) == bytes);
        check_compatible(back, g);
    }
}

TEST_CASE("header layout") {
    const auto c = random_checkpoint(little_graph(), 5);
    const auto bytes = encode_checkpoint(c);
    REQUIRE(bytes.size() > 32);
    CHECK(std::memcmp(bytes.data(), "KGSR", 4) == 0);
    auto u32 = [&](std::size_t at) {
        return std::uint32_t(bytes[at]) | std::uint32_t(bytes[at + 1]) << 8 | std::uint32_t(bytes[at + 2]) << 16 |
               std::uint32_t(bytes[at + 3]) << 24;
    };
    CHECK(u32(4) == kCheckpointVersion);
    CHECK(u32(8) == 3);
    CHECK(u32(12) == 4);
    CHECK(u32(16) == 5);
    CHECK(u32(20) == 4);  // entities
    CHECK(u32(24) == 2);  // relations
    std::uint64_t stored = 0;
    for (int i = 0; i < 8; ++i) stored |= std::uint64_t(bytes[bytes.size() - 8 + i]) << (8 * i);
    CHECK(stored == fnv1a(std::span(bytes).first(bytes.size() - 8)));
}

TEST_CASE("every single-byte corruption is caught") {
    const auto bytes = encode_checkpoint(random_checkpoint(little_graph(), 7));
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        auto bad = bytes;
        bad[i] ^= 0x01;
        if (i < 4) {
            CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);
        } else if (i < 8) {
            CHECK_THROWS_AS(decode_checkpoint(bad), VersionError);
        } else {
            CHECK_THROWS_AS(decode_checkpoint(bad), CorruptionError);
        }
    }
}

TEST_CASE("truncation is caught") {
    const auto bytes = encode_checkpoint(random_checkpoint(little_graph(), 8));
    for (std::size_t n = 0; n < bytes.size(); n += 7) {
        CHECK_THROWS_AS(decode_checkpoint(std::span(bytes).first(n)), CorruptionError);
    }
}

TEST_CASE("bad magic and unknown version are reported even with a valid checksum") {
    const auto bytes = encode_checkpoint(random_checkpoint(little_graph(), 9));
    auto magic = bytes;
    magic[0] = 'X';
    restamp(magic);
    CHECK_THROWS_AS(decode_checkpoint(magic), FormatError);
    auto version = bytes;
    version[4] = 2;
    restamp(version);
    CHECK_THROWS_AS(decode_checkpoint(version), VersionError);
}

TEST_CASE("save and load through a file") {
    const auto g = little_graph();
    const auto c = random_checkpoint(g, 10);
    const auto path = temp_file("roundtrip.bin");
    save_checkpoint(c, path);
    CHECK(load_checkpoint(path) == c);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
}

TEST_CASE("compatibility checks names and sizes") {
    const auto g = little_graph();
    const auto c = random_checkpoint(g, 11);
    auto renamed = c;
    renamed.entity_names[1] = "teapot";
    CHECK_THROWS_AS(check_compatible(renamed, g), ArgumentError);
    auto bigger = g;
    bigger.intern_entity("extra", EntityKind::Item);
    CHECK_THROWS_AS(check_compatible(c, bigger), ArgumentError);
}
