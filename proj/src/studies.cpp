// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#include "poa/studies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "poa/errors.hpp"
#include "poa/parallel.hpp"

namespace poa::lab {

namespace {

Seed32 labelled(const Seed32& root, std::string_view label, std::uint32_t index) {
    Bytes material(root.bytes.begin(), root.bytes.end());
    material.insert(material.end(), label.begin(), label.end());
    append_le32(material, index);
    return Seed32{sha3_256(material)};
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double mu = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double l2_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(ss);
}

void report(const StudyConfig& config, const std::string& line) {
    if (config.progress) config.progress(line);
}

}  // namespace

MetaParams default_study_meta() {
    MetaParams m;
    m.timesteps = 10;
    m.latent_shape = {4, 16, 16};
    return m;
}

Identity study_identity(const Seed32& root, const std::string& label) {
    Identity id;
    id.id_bytes = labelled(root, "identity:" + label, 0).bytes;
    id.label = label;
    id.registered_at = "1970-01-01T00:00:00Z";
    return id;
}

Digest32 study_embedding(const Seed32& root, std::uint32_t index) { return labelled(root, "embedding", index).bytes; }

Kappa study_kappa(const StudyConfig& config, std::uint32_t embedding, std::uint32_t variant) {
    Kappa kappa;
    kappa.m = config.m;
    kappa.e_digest = study_embedding(config.root, embedding);
    const Digest32 r = labelled(config.root, "free-bits:" + std::to_string(variant), embedding).bytes;
    std::copy_n(r.begin(), kappa.r.size(), kappa.r.begin());
    return kappa;
}

std::vector<SampleCountRow> table1(double delta) {
    std::vector<SampleCountRow> rows;
    for (double alpha : {0x1p-10, 0x1p-30, 0x1p-50}) rows.push_back({alpha, delta, required_samples(alpha, delta)});
    return rows;
}

nlohmann::json table1_json(const std::vector<SampleCountRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& row : rows) {
        out.push_back({{"alpha", row.alpha},
                       {"alpha_log2", std::log2(row.alpha)},
                       {"delta", row.delta},
                       {"n", row.n},
                       {"n_log2", std::log2(static_cast<double>(row.n))}});
    }
    return out;
}

nlohmann::json KsStudy::to_json() const {
    nlohmann::json fitted = nlohmann::json::array();
    for (const auto& p : fits) fitted.push_back(gennorm_to_json(p));
    return {{"study", "ks"}, {"ks", ks}, {"fits", fitted}, {"mean", mean}, {"stddev", stddev}};
}

KsStudy ks_study(Backend& backend, const StudyConfig& config, std::size_t embeddings, std::size_t n) {
    const Identity author = study_identity(config.root, "author");
    KsStudy study;
    for (std::uint32_t k = 0; k < embeddings; ++k) {
        const Kappa kappa = study_kappa(config, k);
        const Latent original = backend.generate(kappa.m, kappa.e_digest, derive_seed(author, kappa));
        const std::vector<double> scores = null_scores(backend, kappa.m, kappa.e_digest, original, AffineParams{},
                                                       labelled(config.root, "ks-null", k), n, config.parallelism);
        const GenNormParams fit = fit_gennorm(scores);
        study.fits.push_back(fit);
        study.ks.push_back(ks_distance(scores, fit));
        report(config, "ks-study embedding " + std::to_string(k) + ": KS = " + std::to_string(study.ks.back()));
    }
    study.mean = mean_of(study.ks);
    study.stddev = stddev_of(study.ks);
    return study;
}

nlohmann::json DistanceStudy::to_json(int bins) const {
    nlohmann::json hist = nlohmann::json::array();
    if (!ratios.empty() && bins > 0) {
        const auto [lo_it, hi_it] = std::minmax_element(ratios.begin(), ratios.end());
        const double lo = *lo_it;
        const double width = (*hi_it - lo) / bins;
        std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
        for (double r : ratios) {
            const auto idx = width > 0.0 ? static_cast<std::size_t>((r - lo) / width) : 0;
            ++counts[std::min(idx, counts.size() - 1)];
        }
        for (int b = 0; b < bins; ++b) {
            hist.push_back({{"lo", lo + b * width}, {"hi", lo + (b + 1) * width}, {"count", counts[static_cast<std::size_t>(b)]}});
        }
    }
    return {{"study", "distance"},
            {"bound", bound},
            {"mean", mean},
            {"stddev", stddev_of(ratios)},
            {"embedding_means", embedding_means},
            {"histogram", hist}};
}

DistanceStudy distance_study(SurrogateBackend& backend, const StudyConfig& config, std::size_t embeddings,
                             std::size_t pairs) {
    DistanceStudy study;
    study.bound = distance_ratio_bound(make_schedule(config.m.timesteps).final_alpha());
    for (std::uint32_t k = 0; k < embeddings; ++k) {
        const Digest32 e = study_embedding(config.root, k);
        std::vector<double> ratios(pairs);
        parallel_for(pairs, config.parallelism, [&](std::size_t p) {
            const auto index = static_cast<std::uint32_t>(p);
            const Latent s = starting_point(config.m, labelled(config.root, "pair-a:" + std::to_string(k), index));
            const Latent t = starting_point(config.m, labelled(config.root, "pair-b:" + std::to_string(k), index));
            const Latent ls = backend.generate_from(config.m, e, s);
            const Latent lt = backend.generate_from(config.m, e, t);
            ratios[p] = l2_distance(ls.data, lt.data) / l2_distance(s.data, t.data);
        });
        study.embedding_means.push_back(mean_of(ratios));
        study.ratios.insert(study.ratios.end(), ratios.begin(), ratios.end());
    }
    study.mean = mean_of(study.ratios);
    return study;
}

std::string Condition::label() const {
    switch (kind) {
        case Distortion::None:
            return "none";
        case Distortion::Gaussian:
            return "gaussian(sigma2=" + std::to_string(static_cast<int>(parameter)) + ")";
        case Distortion::Quantize:
            return "quantize(levels=" + std::to_string(static_cast<int>(parameter)) + ")";
        case Distortion::Affine:
            return "affine";
        case Distortion::Unrelated:
            return "unrelated";
    }
    return "unknown";
}

std::vector<Condition> table2_conditions() {
    return {{Distortion::None, 0},      {Distortion::Gaussian, 1}, {Distortion::Gaussian, 3},
            {Distortion::Gaussian, 9},  {Distortion::Quantize, 64}, {Distortion::Quantize, 32},
            {Distortion::Quantize, 8},  {Distortion::Affine, 0}};
}

ContestedObject distorted_claim(Backend& backend, const Latent& original, const Condition& condition,
                                const Seed32& seed, AffineParams& alignment) {
    alignment = AffineParams{};
    switch (condition.kind) {
        case Distortion::None:
        case Distortion::Unrelated:
            return original;
        case Distortion::Gaussian:
            return add_gaussian_noise(backend.decode(original), condition.parameter, seed);
        case Distortion::Quantize:
            return quantize(backend.decode(original), static_cast<int>(condition.parameter));
        case Distortion::Affine: {
            const AffineParams t = sample_affine(seed);
            alignment = invert_affine(t);
            return affine_warp(backend.decode(original), t);
        }
    }
    throw DomainError("unknown distortion");
}

double Table2Study::false_reject_rate(const Table2Cell& cell) const {
    return cell.claims == 0 ? 0.0 : 1.0 - static_cast<double>(cell.accepted) / cell.claims;
}

nlohmann::json Table2Study::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& cell : cells) {
        nlohmann::json row = {{"condition", cell.condition.label()},
                              {"p_r", cell.p_r},
                              {"p_r_log2", std::log2(cell.p_r)},
                              {"claims", cell.claims},
                              {"accepted", cell.accepted},
                              {"errors", cell.errors}};
        if (cell.condition.kind == Distortion::Unrelated) {
            row["false_accept_rate"] = cell.claims == 0 ? 0.0 : static_cast<double>(cell.accepted) / cell.claims;
        } else {
            row["false_reject_rate"] = false_reject_rate(cell);
        }
        rows.push_back(row);
    }
    return {{"study", "table2"}, {"delta", delta}, {"rows", rows}};
}

Table2Study table2_study(Backend& backend, const StudyConfig& config, std::size_t embeddings,
                         const std::vector<double>& p_r_values, double delta, const std::vector<Condition>& conditions,
                         bool include_unrelated) {
    std::vector<Condition> all = conditions;
    if (include_unrelated) all.push_back({Distortion::Unrelated, 0});
    Table2Study study;
    study.delta = delta;
    for (const auto& condition : all) {
        for (double p_r : p_r_values) study.cells.push_back({condition, p_r, 0, 0, 0});
    }
    const Identity author = study_identity(config.root, "author");
    const AdjudicatorOptions options{config.parallelism};
    for (std::uint32_t k = 0; k < embeddings; ++k) {
        const Kappa kappa = study_kappa(config, k);
        const Latent original = backend.generate(kappa.m, kappa.e_digest, derive_seed(author, kappa));
        for (std::size_t c = 0; c < all.size(); ++c) {
            AffineParams alignment;
            ContestedObject contested;
            if (all[c].kind == Distortion::Unrelated) {
                const Kappa other = study_kappa(config, static_cast<std::uint32_t>(embeddings) + k, 1);
                contested = backend.generate(other.m, other.e_digest, derive_seed(author, other));
            } else {
                contested = distorted_claim(backend, original, all[c],
                                            labelled(config.root, "distortion:" + all[c].label(), k), alignment);
            }
            for (std::size_t p = 0; p < p_r_values.size(); ++p) {
                Table2Cell& cell = study.cells[c * p_r_values.size() + p];
                ClaimRequest request{contested, author, kappa, p_r_values[p] / 2.0, delta, alignment, backend.selector()};
                ++cell.claims;
                try {
                    const AdjudicationReport result = adjudicate(request, backend, options);
                    cell.accepted += judge(result, p_r_values[p]).accept;
                } catch (const FitError&) {
                    ++cell.errors;
                }
            }
        }
        report(config, "table2 embedding " + std::to_string(k + 1) + "/" + std::to_string(embeddings));
    }
    return study;
}

std::size_t A2Study::violated() const {
    return static_cast<std::size_t>(std::count_if(reports.begin(), reports.end(), [](const A2Report& r) { return r.violated; }));
}

nlohmann::json A2Study::to_json() const {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : reports) runs.push_back(r.to_json());
    return {{"study", "a2"}, {"rho", rho}, {"runs", reports.size()}, {"violated", violated()}, {"reports", runs}};
}

A2Study a2_study(SurrogateBackend& backend, const StudyConfig& config, double rho, std::size_t runs, std::size_t n) {
    const Identity author = study_identity(config.root, "author");
    if (n == 0) n = required_samples(0x1p-10, 1e-3);
    A2Study study;
    study.rho = rho;
    for (std::uint32_t run = 0; run < runs; ++run) {
        const Kappa kappa = study_kappa(config, run);
        const Latent original = backend.generate(kappa.m, kappa.e_digest, derive_seed(author, kappa));
        BackdooredSurrogate backdoored(backend, original, rho);
        const std::vector<double> scores = null_scores(backdoored, kappa.m, kappa.e_digest, original, AffineParams{},
                                                       labelled(config.root, "a2-null", run), n, config.parallelism);
        try {
            study.reports.push_back(detect_a2_violation(scores, fit_gennorm(scores)));
        } catch (const FitError& e) {
            A2Report failed;
            failed.violated = true;
            failed.reason = std::string("null fit failed: ") + e.what();
            study.reports.push_back(failed);
        }
    }
    return study;
}

}  // namespace poa::lab
