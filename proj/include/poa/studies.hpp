// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

// Desk-scale reproductions of the evaluation protocols, shared by the lab
// subcommands and the acceptance suite. Every study is a pure function of its
// configuration and root seed.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "poa/adjudicator.hpp"
#include "poa/forger_lab.hpp"

namespace poa::lab {

/// Surrogate meta-parameters for desk-scale studies: 10 DDIM steps, d = 1024.
MetaParams default_study_meta();

struct StudyConfig {
    MetaParams m = default_study_meta();
    Seed32 root{};
    int parallelism = 1;
    std::function<void(const std::string&)> progress;  // optional status lines
};

/// Synthetic registered participants and prompts, derived from the root seed.
Identity study_identity(const Seed32& root, const std::string& label);
Digest32 study_embedding(const Seed32& root, std::uint32_t index);
Kappa study_kappa(const StudyConfig& config, std::uint32_t embedding, std::uint32_t variant = 0);

struct SampleCountRow {
    double alpha = 0.0;
    double delta = 0.0;
    std::size_t n = 0;
};
std::vector<SampleCountRow> table1(double delta = 1e-3);
nlohmann::json table1_json(const std::vector<SampleCountRow>& rows);

struct KsStudy {
    std::vector<double> ks;
    std::vector<GenNormParams> fits;
    double mean = 0.0;
    double stddev = 0.0;
    nlohmann::json to_json() const;
};
/// Per embedding: one genuine original J and n null scores Sim(J, J_j); the
/// KS distance of the scores to their own gennorm fit.
KsStudy ks_study(Backend& backend, const StudyConfig& config, std::size_t embeddings, std::size_t n);

struct DistanceStudy {
    double bound = 0.0;                  // f(final alpha_bar)
    std::vector<double> ratios;          // all ||L - L'|| / ||s - s'||
    std::vector<double> embedding_means; // per-embedding mean ratio
    double mean = 0.0;
    nlohmann::json to_json(int bins = 20) const;
};
DistanceStudy distance_study(SurrogateBackend& backend, const StudyConfig& config, std::size_t embeddings,
                             std::size_t pairs);

enum class Distortion { None, Gaussian, Quantize, Affine, Unrelated };

struct Condition {
    Distortion kind = Distortion::None;
    double parameter = 0.0;  // sigma^2 or quantization levels
    std::string label() const;
};
/// Clean, pixel noise sigma^2 in {1, 3, 9}, quantization {64, 32, 8}, random affine.
std::vector<Condition> table2_conditions();

struct Table2Cell {
    Condition condition;
    double p_r = 0.0;
    std::size_t claims = 0;
    std::size_t accepted = 0;
    std::size_t errors = 0;  // fit or backend failures, counted as rejections
};

struct Table2Study {
    std::vector<Table2Cell> cells;  // genuine conditions, then unrelated latents
    double delta = 1e-4;
    nlohmann::json to_json() const;
    double false_reject_rate(const Table2Cell& cell) const;
};

/// Per embedding and condition, builds the contested object, then runs one
/// adjudication per p_r with alpha = p_r / 2 and judges it. Unrelated claims
/// contest the original of the next embedding.
Table2Study table2_study(Backend& backend, const StudyConfig& config, std::size_t embeddings,
                         const std::vector<double>& p_r_values, double delta = 1e-4,
                         const std::vector<Condition>& conditions = table2_conditions(), bool include_unrelated = true);

/// The contested object for one genuine claim.
ContestedObject distorted_claim(Backend& backend, const Latent& original, const Condition& condition,
                                const Seed32& seed, AffineParams& alignment);

struct A2Study {
    double rho = 0.0;
    std::vector<A2Report> reports;
    std::size_t violated() const;
    nlohmann::json to_json() const;
};
/// Per run: a fresh genuine original J, a backdoored surrogate targeting J,
/// and n null scores fed to the detector (n = 0 selects the detector minimum).
/// A null fit that fails is reported as a violation.
A2Study a2_study(SurrogateBackend& backend, const StudyConfig& config, double rho, std::size_t runs,
                 std::size_t n = 0);

}  // namespace poa::lab
