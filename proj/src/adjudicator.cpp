// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#include "poa/adjudicator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "poa/errors.hpp"
#include "poa/parallel.hpp"

namespace poa {

namespace {

constexpr const char* kRequestSchema = "poa-claim/1";

double log2_of(double natural_log) { return natural_log / std::numbers::ln2; }

double log_add_exp(double a, double b) {
    if (std::isinf(a) && a < 0) return b;
    if (std::isinf(b) && b < 0) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

nlohmann::json contested_json(const ContestedObject& contested) {
    return std::visit(
        [](const auto& value) -> nlohmann::json {
            using T = std::decay_t<decltype(value)>;
            if constexpr (std::is_same_v<T, Latent>) {
                return {{"kind", "latent"}, {"shape", value.shape}, {"digest", to_hex(latent_digest(value))}};
            } else if constexpr (std::is_same_v<T, Image>) {
                return {{"kind", "image"}, {"shape", value.shape}, {"digest", to_hex(image_digest(value))}};
            } else {
                return {{"kind", "png"}, {"bytes", value.bytes.size()}, {"digest", to_hex(sha3_256(value.bytes))}};
            }
        },
        contested);
}

std::string describe_composition(const ContestedObject& contested, const AffineParams& t) {
    const bool aligned = !t.is_identity();
    std::string comparison = aligned ? "Sim(J, encode(warp(decode(J_j), t)))" : "Sim(J, J_j)";
    std::string target;
    if (std::holds_alternative<Latent>(contested)) {
        target = aligned ? "T = Sim(J, encode(warp(decode(I), t)))" : "T = Sim(J, I)";
    } else if (std::holds_alternative<Image>(contested)) {
        target = aligned ? "T = Sim(J, encode(warp(I, t)))" : "T = Sim(J, encode(I))";
    } else {
        target = "T = Sim(J, encode_png(I))";
    }
    return target + "; null: " + comparison;
}

// Contested object mapped into latent space and aligned with t.
Latent contested_target(const ContestedObject& contested, const AffineParams& t, Backend& backend) {
    const bool aligned = !t.is_identity();
    if (const auto* latent = std::get_if<Latent>(&contested)) {
        return aligned ? align_latent(*latent, t, backend) : *latent;
    }
    if (const auto* image = std::get_if<Image>(&contested)) {
        return backend.encode(aligned ? affine_warp(*image, t) : *image);
    }
    if (aligned) throw DomainError("alignment transforms need a POAL image or latent, not PNG bytes");
    return backend.encode_png(std::get<PngBytes>(contested).bytes);
}

std::string describe_scores(const std::vector<double>& scores) {
    double lo = scores.front();
    double hi = scores.front();
    double sum = 0.0;
    for (double s : scores) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
        sum += s;
    }
    std::ostringstream out;
    out.precision(17);
    out << "n=" << scores.size() << ", min=" << lo << ", max=" << hi << ", mean=" << sum / scores.size();
    return out.str();
}

}  // namespace

nlohmann::json canonical_request_json(const ClaimRequest& request) {
    nlohmann::json kappa = {
        {"m", meta_to_json(request.kappa.m)},
        {"e_digest_hex", to_hex(request.kappa.e_digest)},
        {"r_hex", to_hex(request.kappa.r)},
    };
    return {
        {"schema", kRequestSchema},
        {"contested", contested_json(request.contested)},
        {"identity_id_hex", request.identity.id_hex()},
        {"kappa", kappa},
        {"alpha", request.alpha},
        {"delta", request.delta},
        {"transform", request.transform.is_identity() ? nlohmann::json(nullptr) : affine_to_json(request.transform)},
        {"backend", request.backend},
    };
}

Digest32 derive_pa_seed(const ClaimRequest& request) { return sha3_256(as_bytes(canonical_request_json(request).dump())); }

Latent align_latent(const Latent& latent, const AffineParams& transform, Backend& backend) {
    if (transform.is_identity()) return latent;
    return backend.encode(affine_warp(backend.decode(latent), transform));
}

std::vector<double> null_scores(Backend& backend, const MetaParams& m, const Digest32& e_digest, const Latent& original,
                                const AffineParams& transform, const Seed32& pa_seed, std::size_t n, int parallelism) {
    std::vector<double> scores(n);
    parallel_for(n, parallelism, [&](std::size_t j) {
        const Latent sample = backend.generate(m, e_digest, derive_subseed(pa_seed, static_cast<std::uint32_t>(j)));
        scores[j] = similarity(original, align_latent(sample, transform, backend));
    });
    return scores;
}

double AdjudicationReport::log_q_upper() const { return log_add_exp(log_q_hat, std::log(alpha)); }

nlohmann::json AdjudicationReport::to_json() const {
    return {
        {"request", request},
        {"composition", composition},
        {"original_digest", to_hex(original_digest)},
        {"T", score},
        {"n", n},
        {"alpha", alpha},
        {"delta", delta},
        {"fitted", gennorm_to_json(fitted)},
        {"fit_evaluations", fit_evaluations},
        {"q_hat", q_hat},
        {"q_hat_log2", log2_of(log_q_hat)},
        {"q_upper", q_upper()},
        {"q_upper_log2", log2_of(log_q_upper())},
        {"interval", {interval_lo, interval_hi}},
        {"ks", ks},
        {"pa_seed", to_hex(pa_seed)},
        {"prf", prf},
        {"tool_version", tool_version},
    };
}

AdjudicationReport AdjudicationReport::from_json(const nlohmann::json& j) {
    AdjudicationReport r;
    try {
        r.request = j.at("request");
        r.composition = j.at("composition").get<std::string>();
        r.original_digest = fixed_from_hex<32>(j.at("original_digest").get<std::string>());
        r.score = j.at("T").get<double>();
        r.n = j.at("n").get<std::size_t>();
        r.alpha = j.at("alpha").get<double>();
        r.delta = j.at("delta").get<double>();
        r.fitted = gennorm_from_json(j.at("fitted"));
        r.fit_evaluations = j.at("fit_evaluations").get<int>();
        r.q_hat = j.at("q_hat").get<double>();
        r.log_q_hat = j.at("q_hat_log2").get<double>() * std::numbers::ln2;
        r.interval_lo = j.at("interval").at(0).get<double>();
        r.interval_hi = j.at("interval").at(1).get<double>();
        r.ks = j.at("ks").get<double>();
        r.pa_seed = fixed_from_hex<32>(j.at("pa_seed").get<std::string>());
        r.prf = j.at("prf").get<std::string>();
        r.tool_version = j.at("tool_version").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("report: ") + e.what());
    }
    return r;
}

AdjudicationReport adjudicate(const ClaimRequest& request, Backend& backend, const AdjudicatorOptions& options) {
    if (!(request.alpha > 0.0 && request.alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    if (!(request.delta > 0.0 && request.delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
    if (request.backend != backend.selector()) {
        throw DomainError("request names backend '" + request.backend + "' but '" + backend.selector() +
                          "' was supplied");
    }
    check_invertible(request.transform);

    AdjudicationReport report;
    report.request = canonical_request_json(request);
    report.composition = describe_composition(request.contested, request.transform);
    report.alpha = request.alpha;
    report.delta = request.delta;

    // Step 0: regenerate the claimed original.
    report.n = required_samples(request.alpha, request.delta);
    const MetaParams& m = request.kappa.m;
    const Latent original = backend.generate(m, request.kappa.e_digest, derive_seed(request.identity, request.kappa));
    report.original_digest = latent_digest(original);

    const Latent target = contested_target(request.contested, request.transform, backend);
    if (target.shape != original.shape) throw ShapeMismatch("contested latent shape differs from the original");
    report.score = similarity(original, target);

    // Step 1: null scores from PA-seeded starting points, aggregated by index.
    const Seed32 pa_seed{derive_pa_seed(request)};
    report.pa_seed = pa_seed.bytes;
    const std::vector<double> scores =
        null_scores(backend, m, request.kappa.e_digest, original, request.transform, pa_seed, report.n, options.parallelism);
    FitResult fit;
    try {
        fit = fit_gennorm_detailed(scores);
    } catch (const FitError& e) {
        throw FitError(std::string(e.what()) + " [scores: " + describe_scores(scores) + "]");
    }
    report.fitted = fit.params;
    report.fit_evaluations = fit.evaluations;

    // Step 2: tail estimate at the raw score.
    report.log_q_hat = log_tail_prob(fit.params, report.score);
    report.q_hat = std::exp(report.log_q_hat);
    report.interval_lo = report.q_hat - request.alpha;
    report.interval_hi = report.q_hat + request.alpha;

    // Step 3: goodness of fit for the judge.
    report.ks = ks_distance(scores, fit.params);
    return report;
}

JudgeVerdict judge(const AdjudicationReport& report, double p_r) {
    if (!(p_r > 0.0 && p_r < 1.0)) throw DomainError("p_r must lie in (0, 1)");
    if (!(report.alpha > 0.0 && report.alpha < 1.0) || !(report.delta > 0.0 && report.delta < 1.0)) {
        throw InconsistentReport("alpha and delta must lie in (0, 1)");
    }
    const double width = report.interval_hi - report.interval_lo;
    const double scale = std::max(std::abs(report.q_hat), report.alpha);
    if (std::abs(width - 2.0 * report.alpha) > 4.0 * std::numeric_limits<double>::epsilon() * scale ||
        std::abs(report.interval_lo - (report.q_hat - report.alpha)) > 2.0 * std::numeric_limits<double>::epsilon() * scale) {
        throw InconsistentReport("confidence interval is not (q_hat - alpha, q_hat + alpha)");
    }
    if (report.n != required_samples(report.alpha, report.delta)) {
        throw InconsistentReport("sample count does not match alpha and delta");
    }

    JudgeVerdict verdict;
    verdict.p_r = p_r;
    verdict.q_upper = report.q_upper();
    verdict.accept = verdict.q_upper <= p_r;
    std::ostringstream why;
    why.precision(6);
    why << (verdict.accept ? "accept" : "reject") << ": q_upper = 2^" << log2_of(report.log_q_upper())
        << (verdict.accept ? " <= " : " > ") << "p_r = 2^" << std::log2(p_r) << " (n = " << report.n
        << ", KS = " << report.ks << ")";
    if (report.alpha != p_r / 2.0) {
        why << "; warning: alpha = 2^" << std::log2(report.alpha) << " differs from p_r/2";
    }
    verdict.rationale = why.str();
    return verdict;
}

}  // namespace poa
