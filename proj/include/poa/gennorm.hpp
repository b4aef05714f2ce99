// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

// Similarity statistic and the generalized normal model of its null
// distribution: density proportional to exp(-(|x - mu| / gamma)^beta).

#pragma once

#include <cstddef>
#include <span>

#include <nlohmann/json.hpp>

#include "poa/tensor.hpp"

namespace poa {

struct GenNormParams {
    double mu = 0.0;
    double gamma = 1.0;
    double beta = 2.0;

    friend bool operator==(const GenNormParams&, const GenNormParams&) = default;
};

nlohmann::json gennorm_to_json(const GenNormParams& p);
GenNormParams gennorm_from_json(const nlohmann::json& j);

/// Throws InvalidParams unless gamma, beta > 0 and everything is finite.
void validate(const GenNormParams& p);

/// (1/d) x . y
double similarity(std::span<const double> x, std::span<const double> y);
double similarity(const Latent& x, const Latent& y);

/// ceil(ln^2(1/alpha) ln(1/delta)).
std::size_t required_samples(double alpha, double delta);

double gennorm_logpdf(const GenNormParams& p, double x);
double gennorm_pdf(const GenNormParams& p, double x);
double gennorm_cdf(const GenNormParams& p, double x);

/// P[X >= threshold]; monotone non-increasing, 0.5 at mu.
double tail_prob(const GenNormParams& p, double threshold);
/// Natural log of tail_prob, finite far below the double range.
double log_tail_prob(const GenNormParams& p, double threshold);

/// Inverse CDF for p in (0, 1).
double gennorm_quantile(const GenNormParams& p, double prob);
/// Threshold t with ln P[X >= t] = log_q, for log_q < 0.
double gennorm_isf_log(const GenNormParams& p, double log_q);

inline constexpr double kMinBeta = 0.3;
inline constexpr double kMaxBeta = 10.0;
inline constexpr double kFitTolerance = 1e-10;
inline constexpr int kMaxFitEvaluations = 100000;

struct FitResult {
    GenNormParams params;
    double log_likelihood = 0.0;
    int evaluations = 0;
};

/// Maximum-likelihood fit by Nelder-Mead simplex search over (mu, beta) with
/// gamma profiled out in closed form; beta is held in [0.3, 10]. Starts at
/// the sample median and beta = 2 (where the profiled gamma equals
/// sqrt(2) * RMS deviation). Stops when the simplex log-likelihood spread
/// drops below 1e-10. Throws DegenerateSample for fewer than 8 samples or
/// constant data, NonConvergence after 1e5 evaluations.
FitResult fit_gennorm_detailed(std::span<const double> samples);
GenNormParams fit_gennorm(std::span<const double> samples);

double gennorm_log_likelihood(const GenNormParams& p, std::span<const double> samples);

/// sup |F_n - F| evaluated at the sample points.
double ks_distance(std::span<const double> samples, const GenNormParams& p);

/// max(0, score) >= threshold.
bool ump_decision(double score, double quantile_threshold);

}  // namespace poa
