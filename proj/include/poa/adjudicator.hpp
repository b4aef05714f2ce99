// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

// Probabilistic adjudication of a contested authorship claim:
//   0. regenerate the claimed original J from the author's seed;
//   1. draw n = ceil(ln^2(1/alpha) ln(1/delta)) starting points from
//      PA-seed child streams, generate J_j and score Sim(J, t(J_j));
//      fit a generalized normal to the scores;
//   2. score the contested object T = Sim(J, t(I)) and estimate
//      q_hat = P[W >= T] under the fit, with interval (q_hat - alpha, q_hat + alpha);
//   3. hand everything to the judge.
// All randomness comes from SHA3-256 over the canonical request, so the
// report is a pure function of the request.

#pragma once

#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "poa/generator.hpp"
#include "poa/gennorm.hpp"
#include "poa/prf_seed.hpp"
#include "poa/transforms.hpp"

namespace poa {

struct PngBytes {
    Bytes bytes;
};

using ContestedObject = std::variant<Latent, Image, PngBytes>;

struct ClaimRequest {
    ContestedObject contested;
    Identity identity;
    Kappa kappa;
    double alpha = 0x1p-51;
    double delta = 1e-4;
    AffineParams transform;  // identity when no alignment is claimed
    std::string backend;     // selector of the backend that must serve the request
};

/// Canonical JSON of every request field; large payloads enter by digest.
nlohmann::json canonical_request_json(const ClaimRequest& request);
Digest32 derive_pa_seed(const ClaimRequest& request);

struct AdjudicationReport {
    nlohmann::json request;  // canonical echo
    std::string composition;
    Digest32 original_digest{};
    double score = 0.0;  // T
    std::size_t n = 0;
    double alpha = 0.0;
    double delta = 0.0;
    GenNormParams fitted;
    double q_hat = 0.0;
    double log_q_hat = 0.0;  // natural log, retained when q_hat underflows
    double interval_lo = 0.0;
    double interval_hi = 0.0;
    double ks = 0.0;
    int fit_evaluations = 0;
    Digest32 pa_seed{};
    std::string prf = kPrfName;
    std::string tool_version = POA_VERSION;

    double q_upper() const { return q_hat + alpha; }
    double log_q_upper() const;

    nlohmann::json to_json() const;
    static AdjudicationReport from_json(const nlohmann::json& j);
    /// Sorted keys, compact.
    std::string canonical() const { return to_json().dump(); }
};

struct AdjudicatorOptions {
    int parallelism = 1;
};

/// Null scores Sim(original, t(J_j)), J_j generated from derive_subseed(pa_seed, j)
/// for j < n, in index order.
std::vector<double> null_scores(Backend& backend, const MetaParams& m, const Digest32& e_digest, const Latent& original,
                                const AffineParams& transform, const Seed32& pa_seed, std::size_t n,
                                int parallelism = 1);

/// Throws BackendError from the backend, FitError (with score diagnostics)
/// when the null fit fails, ShapeMismatch on inconsistent shapes, and
/// DomainError when the request's backend selector does not match `backend`.
AdjudicationReport adjudicate(const ClaimRequest& request, Backend& backend, const AdjudicatorOptions& options = {});

/// Applies the alignment transform in pixel space: encode(warp(decode(x), t)).
Latent align_latent(const Latent& latent, const AffineParams& transform, Backend& backend);

struct JudgeVerdict {
    bool accept = false;
    double p_r = 0.0;
    double q_upper = 0.0;
    std::string rationale;
};

/// Accepts iff q_hat + alpha <= p_r. Throws InconsistentReport when the
/// interval width or n disagree with alpha and delta.
JudgeVerdict judge(const AdjudicationReport& report, double p_r);

}  // namespace poa
