// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
//
// Command-line driver. `kgsr <stage> [flags]` where stage is one of ingest,
// augment, pretrain, train, evaluate, recommend, explain.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kgsr/chat_client.hpp"
#include "kgsr/transe.hpp"
#include "kgsr/trainer.hpp"

namespace kgsr {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct PipelineConfig {
    // inputs and outputs
    std::string triples;
    std::string interactions;
    std::string graph;
    std::string train_set;
    std::string test_set;
    std::string reviews;
    std::string lexicon;
    std::string targets;
    std::string checkpoint;
    std::string pretrained;
    std::string output;
    std::string out_dir;
    std::string extractions;

    // ingest
    double train_fraction = 0.8;
    std::string purchase_relation = "purchase";
    std::uint64_t split_seed = 42;

    // augment / explain
    bool use_llm = false;
    bool offline = false;
    ChatClientConfig llm;

    TranseConfig transe;
    TrainConfig train;

    // evaluate / recommend / explain
    std::size_t k = 10;
    std::string subgraph_sizes;
    std::string format = "json";
    std::vector<std::string> users;
    std::string item;
    std::size_t paths = 1;

    std::string log_level = "info";
};

// Parses and runs one stage. `args` excludes the program name. Data goes to
// `out`, diagnostics and logs to `err`. Returns an exit status: 0 success,
// 1 stage failure, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// key=value lines, '#' comments; keys map to the flags of the chosen stage.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path);

}  // namespace kgsr
