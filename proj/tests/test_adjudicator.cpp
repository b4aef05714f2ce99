// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "poa/adjudicator.hpp"
#include "poa/errors.hpp"
#include "poa/studies.hpp"
#include "support.hpp"

namespace poa {
namespace {

struct Fixture {
    SurrogateBackend backend;
    ClaimRequest request;
    Latent original;

    explicit Fixture(const std::string& prompt = "a lighthouse at dusk", double alpha = 0x1p-11, double delta = 1e-3) {
        request.identity = test::identity_from("author");
        request.kappa.m = lab::default_study_meta();
        request.kappa.e_digest = test::digest_from(prompt);
        for (int i = 0; i < 16; ++i) request.kappa.r[i] = static_cast<std::uint8_t>(3 * i + 1);
        request.alpha = alpha;
        request.delta = delta;
        request.backend = backend.selector();
        original = backend.generate(request.kappa.m, request.kappa.e_digest,
                                    derive_seed(request.identity, request.kappa));
        request.contested = original;
    }
};

TEST(PaSeed, DeterministicAndSensitive) {
    Fixture f;
    EXPECT_EQ(derive_pa_seed(f.request), derive_pa_seed(f.request));
    ClaimRequest other = f.request;
    other.alpha = 0x1p-12;
    EXPECT_NE(derive_pa_seed(f.request), derive_pa_seed(other));
    other = f.request;
    other.transform.rot_deg = 1.0;
    EXPECT_NE(derive_pa_seed(f.request), derive_pa_seed(other));
}

// Frozen canonical request and its digest; the digest was recomputed with
// Python's hashlib.sha3_256 over the JSON text.
TEST(PaSeed, KnownAnswer) {
    ClaimRequest request;
    request.identity.id_bytes.fill(0x11);
    request.kappa.e_digest.fill(0x22);
    request.kappa.r.fill(0x33);
    request.contested = Latent::zeros({1, 2, 2});
    request.alpha = 0.25;
    request.delta = 0.5;
    request.backend = "surrogate(upscale=4)";
    const std::string expected_json =
        R"j({"alpha":0.25,"backend":"surrogate(upscale=4)","contested":{"digest":"4593f1b3ead7ee2b2d3aafaab2fa9621201f36a7db2a3da75d5d2bd821ddcfea",)j"
        R"j("kind":"latent","shape":[1,2,2]},"delta":0.5,)j"
        R"j("identity_id_hex":"1111111111111111111111111111111111111111111111111111111111111111",)j"
        R"j("kappa":{"e_digest_hex":"2222222222222222222222222222222222222222222222222222222222222222",)j"
        R"j("m":{"latent_shape":[4,16,16],"model_tag":"toy-ddim-v1","scheduler":"ddim","timesteps":50},)j"
        R"j("r_hex":"33333333333333333333333333333333"},"schema":"poa-claim/1","transform":null})j";
    EXPECT_EQ(canonical_request_json(request).dump(), expected_json);
    EXPECT_EQ(to_hex(derive_pa_seed(request)), "b22c514edbd425d18c082591020fec60c0597c0ac8561341afc716b06cda147e");
}

TEST(Adjudicate, GenuineCleanClaimAccepted) {
    Fixture f("genuine", 0x1p-51, 1e-4);
    AdjudicationReport report = adjudicate(f.request, f.backend);
    EXPECT_EQ(report.n, required_samples(0x1p-51, 1e-4));
    EXPECT_LE(report.log_q_upper(), -50.0 * std::log(2.0));
    JudgeVerdict v = judge(report, 0x1p-50);
    EXPECT_TRUE(v.accept) << v.rationale;
    EXPECT_EQ(report.original_digest, latent_digest(f.original));
    EXPECT_NEAR(report.score, similarity(f.original, f.original), 0.0);
}

TEST(Adjudicate, UnrelatedLatentRejected) {
    Fixture f("owner");
    Fixture other("someone else entirely");
    f.request.contested = other.original;
    AdjudicationReport report = adjudicate(f.request, f.backend);
    EXPECT_GE(report.q_hat, 0.01);
    for (double p_r : {0x1p-10, 0x1p-30, 0x1p-50}) EXPECT_FALSE(judge(report, p_r).accept);
}

TEST(Adjudicate, ByteIdenticalReruns) {
    Fixture f;
    const std::string a = adjudicate(f.request, f.backend).canonical();
    SurrogateBackend fresh;
    const std::string b = adjudicate(f.request, fresh).canonical();
    EXPECT_EQ(a, b);
    const std::string c = adjudicate(f.request, fresh, AdjudicatorOptions{4}).canonical();
    EXPECT_EQ(a, c);
}

TEST(Adjudicate, ReportInvariants) {
    Fixture f;
    AdjudicationReport r = adjudicate(f.request, f.backend);
    EXPECT_EQ(r.n, required_samples(f.request.alpha, f.request.delta));
    EXPECT_DOUBLE_EQ(r.interval_hi - r.interval_lo, 2.0 * f.request.alpha);
    EXPECT_EQ(r.interval_lo, r.q_hat - f.request.alpha);
    EXPECT_EQ(r.prf, "HMAC-SHA3-256");
    EXPECT_EQ(r.tool_version, POA_VERSION);
    EXPECT_EQ(r.pa_seed, derive_pa_seed(f.request));
    EXPECT_GE(r.q_hat, 0.0);
    EXPECT_LE(r.q_hat, 1.0);

    auto j = r.to_json();
    for (const char* key : {"q_hat_log2", "q_upper_log2", "interval", "fitted", "ks", "pa_seed", "request", "T", "n"})
        EXPECT_TRUE(j.contains(key)) << key;
    AdjudicationReport back = AdjudicationReport::from_json(j);
    EXPECT_EQ(back.canonical(), r.canonical());
}

TEST(Adjudicate, NullScoresAreIndexOrdered) {
    Fixture f;
    Seed32 pa{derive_pa_seed(f.request)};
    auto serial = null_scores(f.backend, f.request.kappa.m, f.request.kappa.e_digest, f.original, {}, pa, 40, 1);
    auto parallel = null_scores(f.backend, f.request.kappa.m, f.request.kappa.e_digest, f.original, {}, pa, 40, 3);
    EXPECT_EQ(serial, parallel);
    auto prefix = null_scores(f.backend, f.request.kappa.m, f.request.kappa.e_digest, f.original, {}, pa, 10, 1);
    EXPECT_TRUE(std::equal(prefix.begin(), prefix.end(), serial.begin()));
}

TEST(Adjudicate, HigherScoreNeverRaisesTail) {
    Fixture f;
    AdjudicationReport r = adjudicate(f.request, f.backend);
    double prev = 1.0;
    for (double t = r.fitted.mu - 0.2; t < r.fitted.mu + 0.5; t += 0.01) {
        const double q = tail_prob(r.fitted, t);
        EXPECT_LE(q, prev);
        prev = q;
    }
}

TEST(Adjudicate, AlignedImageClaim) {
    Fixture f;
    AffineParams t = sample_affine(test::seed_from(5));
    Image warped = affine_warp(f.backend.decode(f.original), t);
    f.request.contested = warped;
    f.request.transform = invert_affine(t);
    AdjudicationReport r = adjudicate(f.request, f.backend);
    EXPECT_NE(r.composition.find("warp"), std::string::npos);
    EXPECT_TRUE(judge(r, 0x1p-10).accept);
}

TEST(Adjudicate, ErrorPaths) {
    Fixture f;
    ClaimRequest bad = f.request;
    bad.alpha = 0.0;
    EXPECT_THROW(adjudicate(bad, f.backend), DomainError);
    bad = f.request;
    bad.backend = "elsewhere";
    EXPECT_THROW(adjudicate(bad, f.backend), DomainError);
    bad = f.request;
    bad.contested = Latent::zeros({4, 8, 8});
    EXPECT_THROW(adjudicate(bad, f.backend), ShapeMismatch);
    bad = f.request;
    bad.transform.scale = 0.0;
    EXPECT_THROW(adjudicate(bad, f.backend), SingularTransform);
    bad = f.request;
    bad.contested = PngBytes{Bytes{0x89, 'P', 'N', 'G'}};
    EXPECT_THROW(adjudicate(bad, f.backend), BackendError);
}

// A backend whose null draws collapse to one value cannot be fitted.
class ConstantBackend : public SurrogateBackend {
public:
    explicit ConstantBackend(Latent original) : original_(std::move(original)) {}
    Latent generate(const MetaParams& m, const Digest32& e, const Seed32& seed) override {
        if (calls_++ == 0) return SurrogateBackend::generate(m, e, seed);
        return Latent::zeros(original_.shape);
    }

private:
    Latent original_;
    int calls_ = 0;
};

TEST(Adjudicate, FitFailureCarriesDiagnostics) {
    Fixture f;
    ConstantBackend backend(f.original);
    try {
        adjudicate(f.request, backend);
        FAIL() << "expected FitError";
    } catch (const FitError& e) {
        EXPECT_NE(std::string(e.what()).find("scores"), std::string::npos);
    }
}

AdjudicationReport synthetic_report(double q_hat, double alpha, double delta = 1e-4) {
    AdjudicationReport r;
    r.alpha = alpha;
    r.delta = delta;
    r.n = required_samples(alpha, delta);
    r.q_hat = q_hat;
    r.log_q_hat = std::log(q_hat);
    r.interval_lo = q_hat - alpha;
    r.interval_hi = q_hat + alpha;
    return r;
}

TEST(Judge, ArithmeticOfTheRule) {
    EXPECT_TRUE(judge(synthetic_report(0x1p-60, 0x1p-51), 0x1p-50).accept);
    EXPECT_FALSE(judge(synthetic_report(0x1p-20, 0x1p-51), 0x1p-30).accept);
    JudgeVerdict v = judge(synthetic_report(0x1p-60, 0x1p-51), 0x1p-50);
    EXPECT_EQ(v.accept, v.q_upper <= v.p_r);
    EXPECT_EQ(v.rationale.find("warning"), std::string::npos);
    JudgeVerdict w = judge(synthetic_report(0x1p-60, 0x1p-52), 0x1p-50);
    EXPECT_NE(w.rationale.find("warning"), std::string::npos);
}

TEST(Judge, InconsistentReports) {
    AdjudicationReport r = synthetic_report(0x1p-40, 0x1p-31);
    r.interval_hi += 0x1p-20;
    EXPECT_THROW(judge(r, 0x1p-30), InconsistentReport);
    r = synthetic_report(0x1p-40, 0x1p-31);
    r.n -= 1;
    EXPECT_THROW(judge(r, 0x1p-30), InconsistentReport);
}

// Scores between independent starting points centre on zero; self-scores are positive.
TEST(NullModel, IndependentScoresCentred) {
    SurrogateBackend backend;
    lab::StudyConfig config;
    config.root = test::seed_from(99);
    std::vector<double> means;
    std::vector<double> self;
    for (std::uint32_t k = 0; k < 10; ++k) {
        Kappa kappa = lab::study_kappa(config, k);
        Identity id = lab::study_identity(config.root, "author");
        Latent j = backend.generate(kappa.m, kappa.e_digest, derive_seed(id, kappa));
        auto scores = null_scores(backend, kappa.m, kappa.e_digest, j, {}, test::seed_from(1000 + k), 100);
        means.push_back(test::mean(scores));
        self.push_back(similarity(j, j));
    }
    const double se = std::sqrt(test::variance(means) / means.size());
    EXPECT_LE(std::abs(test::mean(means)), 3.0 * se + 1e-12);
    const double self_se = std::sqrt(test::variance(self) / self.size());
    EXPECT_GT(test::mean(self), 10.0 * self_se);
}

}  // namespace
}  // namespace poa
