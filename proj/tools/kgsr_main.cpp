// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#include <iostream>
#include <string>
#include <vector>

#include "kgsr/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return kgsr::run(args, std::cout, std::cerr);
}
