// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are fixed
// here; nothing is read from the environment except the run selection.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "poa/adjudicator.hpp"
#include "poa/forger_lab.hpp"
#include "poa/hash.hpp"
#include "poa/studies.hpp"
#include "poa/transforms.hpp"

namespace poa::acceptance {
namespace {

// Sample counts
constexpr double kTable1Delta = 1e-3;
constexpr double kTable1Log2Slack = 0.5;
// Estimation error
constexpr int kErrorReps = 200;
constexpr double kErrorRelTolerance = 0.2;
constexpr double kErrorPassFraction = 0.999;
// Goodness of fit
constexpr std::size_t kKsEmbeddings = 20;
constexpr std::size_t kKsSamples = 332;
constexpr double kKsMeanBound = 0.05;
// Distortion robustness
constexpr std::size_t kTable2Embeddings = 100;
constexpr double kTable2Delta = 1e-4;
constexpr double kTable2MaxFalseReject = 0.02;
// Concentration
constexpr std::size_t kConcentrationDim = 16384;
constexpr int kConcentrationTrials = 1000;
constexpr double kConcentrationHalfWidth = 0.0663;
constexpr double kConcentrationPassFraction = 0.99;
// Distance preservation
constexpr std::size_t kDistanceEmbeddings = 30;
constexpr std::size_t kDistancePairs = 30;
// Worst-case perturbation
constexpr double kTightnessRelTolerance = 1e-8;
constexpr int kRandomPerturbations = 10000;
constexpr double kPerturbationEps = 1.0;
// Security contrast
constexpr std::size_t kSecurityRounds = 10000;
constexpr double kSecurityStderrs = 3.0;
constexpr double kBrokenDistinguisherWinRate = 0.99;
constexpr double kBrokenReplayAdvantage = 0.45;
// Null-model failure detection
constexpr std::size_t kA2Runs = 100;
constexpr double kA2Rho = 0.05;
constexpr double kA2CleanOkFraction = 0.99;

struct Outcome {
    bool pass = false;
    std::string detail;
};

Seed32 root_for(const std::string& label) { return Seed32{sha3_256(as_bytes("poa-acceptance/" + label))}; }

lab::StudyConfig config_for(const std::string& label, int parallelism, bool progress) {
    lab::StudyConfig config;
    config.root = root_for(label);
    config.parallelism = parallelism;
    if (progress) config.progress = [](const std::string& line) { std::cerr << "  .. " << line << '\n'; };
    return config;
}

std::string fmt(const char* format, auto... args) {
    char buffer[512];
    std::snprintf(buffer, sizeof buffer, format, args...);
    return buffer;
}

struct Options {
    std::size_t table2_embeddings = kTable2Embeddings;
    int parallelism = 1;
    bool progress = false;
};

Outcome table1_counts(const Options&) {
    const double alphas[] = {0x1p-10, 0x1p-30, 0x1p-50};
    const double magnitudes[] = {8.0, 12.0, 13.0};
    Outcome out{true, ""};
    const auto rows = lab::table1(kTable1Delta);
    for (std::size_t i = 0; i < 3; ++i) {
        const double la = std::log(1.0 / alphas[i]);
        const auto expected = static_cast<std::size_t>(std::ceil(la * la * std::log(1.0 / kTable1Delta)));
        const double log2n = std::log2(static_cast<double>(rows[i].n));
        const bool ok = rows[i].n == expected && std::abs(log2n - magnitudes[i]) <= kTable1Log2Slack;
        out.pass = out.pass && ok;
        out.detail += fmt("%sn(2^%d)=%zu (2^%.2f vs ~2^%.0f)", i ? ", " : "", static_cast<int>(std::log2(alphas[i])),
                          rows[i].n, log2n, magnitudes[i]);
    }
    return out;
}

Outcome estimation_error(const Options&) {
    const GenNormParams truth{0.0, std::sqrt(2.0), 2.0};
    const double q = 0x1p-10;
    const double threshold = gennorm_quantile(truth, 1.0 - q);
    const std::size_t n = required_samples(q, kTable1Delta);
    std::mt19937_64 rng(20260101);
    std::normal_distribution<double> normal(0.0, 1.0);
    int within = 0;
    std::vector<double> errors;
    for (int rep = 0; rep < kErrorReps; ++rep) {
        std::vector<double> xs(n);
        for (auto& x : xs) x = normal(rng);
        const double q_hat = tail_prob(fit_gennorm(xs), threshold);
        const double rel = std::abs(q_hat - q) / q;
        errors.push_back(rel);
        within += rel <= kErrorRelTolerance;
    }
    std::sort(errors.begin(), errors.end());
    const double fraction = static_cast<double>(within) / kErrorReps;
    return {fraction >= kErrorPassFraction,
            fmt("%d/%d reps within 1/5 (%.3f, need >= %.3f); median relative error %.3f at n=%zu, q=2^-10", within,
                kErrorReps, fraction, kErrorPassFraction, errors[errors.size() / 2], n)};
}

Outcome ks_goodness(const Options& o) {
    SurrogateBackend backend;
    const lab::KsStudy s = lab::ks_study(backend, config_for("ks", o.parallelism, o.progress), kKsEmbeddings, kKsSamples);
    return {s.mean <= kKsMeanBound,
            fmt("mean KS %.4f +- %.4f over %zu embeddings, n=%zu (bound %.2f)", s.mean, s.stddev, kKsEmbeddings,
                kKsSamples, kKsMeanBound)};
}

Outcome table2(const Options& o) {
    SurrogateBackend backend;
    const auto start = std::chrono::steady_clock::now();
    const lab::Table2Study s = lab::table2_study(backend, config_for("table2", o.parallelism, o.progress),
                                                 o.table2_embeddings, {0x1p-10, 0x1p-30, 0x1p-50}, kTable2Delta);
    const double minutes =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
    bool pass = o.table2_embeddings > 0;
    double worst = 0.0;
    std::string worst_cell = "none";
    std::size_t false_accepts = 0, unrelated = 0, errors = 0;
    for (const auto& cell : s.cells) {
        errors += cell.errors;
        if (cell.condition.kind == lab::Distortion::Unrelated) {
            false_accepts += cell.accepted;
            unrelated += cell.claims;
            continue;
        }
        const double frr = s.false_reject_rate(cell);
        if (frr > worst || worst_cell == "none") {
            worst = frr;
            worst_cell = cell.condition.label() + fmt(" @2^%.0f", std::log2(cell.p_r));
        }
        pass = pass && frr <= kTable2MaxFalseReject;
    }
    pass = pass && false_accepts == 0;
    return {pass, fmt("%zu embeddings: worst false-reject %.3f (%s, bound %.2f); false accepts %zu/%zu; fit errors %zu; "
                      "%.1f min",
                      o.table2_embeddings, worst, worst_cell.c_str(), kTable2MaxFalseReject, false_accepts, unrelated,
                      errors, minutes)};
}

Outcome concentration(const Options&) {
    const Seed32 root = root_for("concentration");
    int inside = 0;
    double lo = 1e300, hi = -1e300;
    for (int k = 0; k < kConcentrationTrials; ++k) {
        const auto a = sample_gaussian(derive_subseed(root, 2 * k), kConcentrationDim);
        const auto b = sample_gaussian(derive_subseed(root, 2 * k + 1), kConcentrationDim);
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
        s /= static_cast<double>(kConcentrationDim);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
        inside += std::abs(s - 2.0) <= kConcentrationHalfWidth;
    }
    const double fraction = static_cast<double>(inside) / kConcentrationTrials;
    return {fraction >= kConcentrationPassFraction,
            fmt("%d/%d within 2 +- %.4f at d=%zu (range %.4f..%.4f)", inside, kConcentrationTrials,
                kConcentrationHalfWidth, kConcentrationDim, lo, hi)};
}

Outcome distance_preservation(const Options& o) {
    SurrogateBackend backend;
    const lab::DistanceStudy s =
        lab::distance_study(backend, config_for("distance", o.parallelism, o.progress), kDistanceEmbeddings, kDistancePairs);
    const double lowest = *std::min_element(s.embedding_means.begin(), s.embedding_means.end());
    return {lowest > s.bound && s.mean > s.bound,
            fmt("mean ratio %.4f, lowest embedding mean %.4f, bound f(alpha_bar_T) = %.4f (%zu x %zu)", s.mean, lowest,
                s.bound, kDistanceEmbeddings, kDistancePairs)};
}

double conjugate(double p) { return p == 1.0 ? kInfinity : p / (p - 1.0); }

Outcome perturbation_tightness(const Options&) {
    SurrogateBackend backend;
    const MetaParams m = lab::default_study_meta();
    const Latent latent = backend.generate(m, sha3_256(as_bytes("tightness")), root_for("tightness"));
    const double self = similarity(latent, latent);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal;
    double worst_rel = 0.0;
    int beaten = 0;
    bool pass = true;
    for (double p : {1.0, 1.5, 2.0, 4.0}) {
        const Latent v = worst_case_perturbation(latent, kPerturbationEps, p);
        Latent moved = latent;
        for (std::size_t i = 0; i < moved.size(); ++i) moved.data[i] += v.data[i];
        const double drop = self - similarity(latent, moved);
        const double predicted = kPerturbationEps * lp_norm(latent.data, conjugate(p)) / latent.size();
        const double rel = std::abs(drop - predicted) / predicted;
        worst_rel = std::max(worst_rel, rel);
        pass = pass && rel <= kTightnessRelTolerance;
        for (int t = 0; t < kRandomPerturbations; ++t) {
            std::vector<double> r(latent.size());
            for (auto& x : r) x = normal(rng);
            const double scale = kPerturbationEps / lp_norm(r, p);
            Latent other = latent;
            for (std::size_t i = 0; i < r.size(); ++i) other.data[i] += r[i] * scale;
            const double random_drop = self - similarity(latent, other);
            if (random_drop > drop) ++beaten;
        }
    }
    pass = pass && beaten == 0;
    return {pass, fmt("worst relative gap %.2e (tolerance %.0e); random perturbations exceeding the worst case: %d of %d",
                      worst_rel, kTightnessRelTolerance, beaten, 4 * kRandomPerturbations)};
}

Outcome security_contrast(const Options& o) {
    SurrogateBackend backend;
    const lab::StudyConfig config = config_for("security", o.parallelism, o.progress);
    const Identity author = lab::study_identity(config.root, "author");
    const Identity forger = lab::study_identity(config.root, "forger");
    const Kappa kappa = lab::study_kappa(config, 0);
    const auto secure = lab::PrfFamily::hmac_sha3();
    bool pass = true;
    std::ostringstream detail;

    for (const auto& strategy : {lab::replay_strategy(), lab::random_guess_strategy()}) {
        const auto est = lab::estimate_advantage(strategy, kappa, author, forger, kSecurityRounds, backend,
                                                 derive_subseed(config.root, 1), secure, config.parallelism);
        const bool ok = std::abs(est.advantage) <= kSecurityStderrs * est.stderr_;
        pass = pass && ok;
        detail << fmt("%s adv %+.4f (3se %.4f)%s; ", strategy.name.c_str(), est.advantage,
                      kSecurityStderrs * est.stderr_, ok ? "" : " OUT");
    }
    lab::ConstantDistinguisher constant;
    lab::BitFrequencyDistinguisher frequency;
    lab::XorRecoveryDistinguisher recovery;
    for (lab::Distinguisher* d : std::initializer_list<lab::Distinguisher*>{&constant, &frequency, &recovery}) {
        const auto t = lab::play_prf_game(*d, secure, kSecurityRounds, derive_subseed(config.root, 2));
        const bool ok = std::abs(t.advantage()) <= kSecurityStderrs * t.stderr_();
        pass = pass && ok;
        detail << fmt("%s adv %+.4f (3se %.4f)%s; ", d->name().c_str(), t.advantage(), kSecurityStderrs * t.stderr_(),
                      ok ? "" : " OUT");
    }
    const auto broken_game = lab::play_prf_game(recovery, lab::PrfFamily::insecure(lab::InsecurePrf::XorPrefix),
                                                kSecurityRounds, derive_subseed(config.root, 3));
    const auto broken_replay =
        lab::estimate_advantage(lab::replay_strategy(), kappa, author, forger, kSecurityRounds, backend,
                                derive_subseed(config.root, 4), lab::PrfFamily::insecure(lab::InsecurePrf::TailTruncate),
                                config.parallelism);
    pass = pass && broken_game.win_rate() >= kBrokenDistinguisherWinRate &&
           broken_replay.advantage >= kBrokenReplayAdvantage;
    detail << fmt("broken PRF: xor-recovery wins %.4f (need %.2f), replay adv %.4f (need %.2f)", broken_game.win_rate(),
                  kBrokenDistinguisherWinRate, broken_replay.advantage, kBrokenReplayAdvantage);
    return {pass, detail.str()};
}

Outcome a2_detection(const Options& o) {
    SurrogateBackend backend;
    const std::size_t n = required_samples(0x1p-31, kTable2Delta);
    const lab::A2Study clean = lab::a2_study(backend, config_for("a2-clean", o.parallelism, o.progress), 0.0, kA2Runs, n);
    const lab::A2Study planted =
        lab::a2_study(backend, config_for("a2-backdoor", o.parallelism, o.progress), kA2Rho, kA2Runs, n);
    const double ok_fraction = 1.0 - static_cast<double>(clean.violated()) / kA2Runs;
    return {ok_fraction >= kA2CleanOkFraction && planted.violated() == kA2Runs,
            fmt("clean ok %zu/%zu (need >= %.2f); rho=%.2f violated %zu/%zu; n=%zu per run", kA2Runs - clean.violated(),
                kA2Runs, kA2CleanOkFraction, kA2Rho, planted.violated(), kA2Runs, n)};
}

Outcome determinism(const Options&) {
    const lab::StudyConfig config = config_for("determinism", 1, false);
    ClaimRequest request;
    request.identity = lab::study_identity(config.root, "author");
    request.kappa = lab::study_kappa(config, 0);
    request.alpha = 0x1p-11;
    request.delta = 1e-3;
    SurrogateBackend first;
    request.contested = first.generate(request.kappa.m, request.kappa.e_digest, derive_seed(request.identity, request.kappa));
    request.backend = first.selector();
    const std::string a = adjudicate(request, first).canonical();
    SurrogateBackend second;
    const std::string b = adjudicate(request, second).canonical();
    const std::string c = adjudicate(request, second, AdjudicatorOptions{4}).canonical();
    return {a == b && b == c, fmt("%zu-byte reports, run1 == run2: %s, serial == 4 workers: %s, sha3 %s", a.size(),
                                  a == b ? "yes" : "no", b == c ? "yes" : "no",
                                  to_hex(sha3_256(as_bytes(a))).substr(0, 16).c_str())};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome(const Options&)> run;
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> all = {
        {1, "sample-count rule", table1_counts},
        {2, "estimation error within q/5", estimation_error},
        {3, "gennorm goodness of fit", ks_goodness},
        {4, "distortion robustness", table2},
        {5, "starting-point concentration", concentration},
        {6, "latent distance ratio bound", distance_preservation},
        {7, "worst-case perturbation tightness", perturbation_tightness},
        {8, "PRF security contrast", security_contrast},
        {9, "null-model failure detection", a2_detection},
        {10, "byte-identical reports", determinism},
    };
    return all;
}

}  // namespace
}  // namespace poa::acceptance

int main(int argc, char** argv) {
    using namespace poa::acceptance;
    CLI::App app{"poa acceptance suite"};
    std::vector<int> selected;
    Options options;
    app.add_option("--criterion", selected, "Criteria to run (default: all)")->check(CLI::Range(1, 10));
    app.add_option("--embeddings", options.table2_embeddings, "Embeddings for the distortion-robustness protocol");
    app.add_option("--parallelism", options.parallelism, "Worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--progress", options.progress, "Status lines on stderr");
    CLI11_PARSE(app, argc, argv);

    const std::set<int> wanted(selected.begin(), selected.end());
    int failures = 0;
    for (const auto& c : criteria()) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = c.run(options);
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += !outcome.pass;
        std::cout << (outcome.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name
                  << "): " << outcome.detail << " [" << fmt("%.1f", seconds) << " s]" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
