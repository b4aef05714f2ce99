// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "poa/generator.hpp"

namespace poa::cli {

enum ExitCode : int {
    kAccept = 0,
    kReject = 1,
    kBackendFailure = 2,
    kFitFailure = 3,
    kUsage = 4,
};

struct WorkspaceConfig {
    std::filesystem::path registry = "registry.jsonl";
    std::filesystem::path archive = "archive.jsonl";
    std::string backend = "surrogate";  // "surrogate" or "remote"
    std::string endpoint;               // remote only
    CodecConfig codec;
    std::optional<double> alpha;        // unset: p_r / 2
    double delta = 1e-4;
    double p_r = 0x1p-50;
    Shape3 latent_shape{4, 16, 16};
    int parallelism = 1;

    nlohmann::json to_json() const;
    /// Relative paths resolve against `base`.
    static WorkspaceConfig from_json(const nlohmann::json& j, const std::filesystem::path& base);
    std::unique_ptr<Backend> make_backend() const;
};

/// Loads the config named by --workspace or POA_WORKSPACE; defaults rooted at
/// the working directory when neither is given.
WorkspaceConfig load_workspace(const std::optional<std::filesystem::path>& path);

/// Parses "2^-50", "0x1p-50" or a decimal.
double parse_probability(const std::string& text);

/// Runs one command line (args exclude the program name). JSON results go to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace poa::cli
