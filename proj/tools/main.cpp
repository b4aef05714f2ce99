// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return poa::cli::run(args, std::cout, std::cerr);
}
