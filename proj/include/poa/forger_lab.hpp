// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

// Empirical security harness: random-forger success rates, forger advantage,
// the PRF indistinguishability game, and detection of null-model failures.

#pragma once

#include <functional>
#include <string>

#include <nlohmann/json.hpp>

#include "poa/generator.hpp"
#include "poa/gennorm.hpp"
#include "poa/prf_seed.hpp"

namespace poa::lab {

/// Insecure PRFs for contrast experiments only; the adjudicator always uses
/// derive_seed and cannot select these.
enum class InsecurePrf {
    XorPrefix,     // key XOR the first 32 message bytes
    TailTruncate,  // last 32 message bytes, key ignored
};

class PrfFamily {
public:
    static PrfFamily hmac_sha3() { return PrfFamily(false, InsecurePrf::XorPrefix); }
    static PrfFamily insecure(InsecurePrf kind) { return PrfFamily(true, kind); }

    Digest32 evaluate(std::span<const std::uint8_t> key, std::span<const std::uint8_t> message) const;
    Seed32 seed(const Identity& identity, const Kappa& kappa) const {
        return Seed32{evaluate(identity.id_bytes, canonical_kappa_bytes(kappa))};
    }
    bool is_insecure() const { return insecure_; }
    std::string name() const;

private:
    PrfFamily(bool insecure, InsecurePrf kind) : insecure_(insecure), kind_(kind) {}
    bool insecure_;
    InsecurePrf kind_;
};

/// Fresh free bits for trial `trial`, from the root seed's keystream.
FreeBits trial_free_bits(const Seed32& root, std::uint32_t trial);
Seed32 trial_seed(const Seed32& root, std::uint32_t trial);

struct ForgerStrategy {
    std::string name;
    std::function<Kappa(const Latent& contested, const Kappa& kappa, const Identity& forger, const Seed32& trial_seed)>
        propose;
};

/// Re-submits the author's kappa under the forger's identity.
ForgerStrategy replay_strategy();
/// Same (m, e) with fresh free bits.
ForgerStrategy random_guess_strategy();

struct SuccessRate {
    std::size_t trials = 0;
    std::size_t successes = 0;
    double rate() const { return trials == 0 ? 0.0 : static_cast<double>(successes) / trials; }
    nlohmann::json to_json() const;
};

/// Fraction of trials whose forger-keyed generation with fresh r' reaches
/// Sim(contested, .) >= threshold.
SuccessRate random_forger_success(const Latent& contested, const Kappa& kappa, const Identity& forger,
                                  double threshold, std::size_t trials, Backend& backend, const Seed32& root,
                                  const PrfFamily& prf = PrfFamily::hmac_sha3(), int parallelism = 1);

struct AdvantageEstimate {
    std::string strategy;
    std::size_t trials = 0;
    std::size_t successes = 0;  // forged score strictly above the random-forger score
    double advantage = 0.0;     // successes / trials - 1/2
    double stderr_ = 0.0;       // binomial standard error
    nlohmann::json to_json() const;
};

/// Advantage at a fixed (I, kappa): the strategy runs once and its score is
/// compared against `trials` random-forger scores under the author's identity.
AdvantageEstimate advantage_at(const ForgerStrategy& strategy, const Latent& contested, const Kappa& kappa,
                               const Identity& author, const Identity& forger, std::size_t trials, Backend& backend,
                               const Seed32& root, const PrfFamily& prf = PrfFamily::hmac_sha3());

/// Advantage averaged over claims: each trial draws fresh author free bits,
/// generates the author's object, runs the strategy, and compares its score
/// against one random-forger score. Requires trials >= 100.
AdvantageEstimate estimate_advantage(const ForgerStrategy& strategy, const Kappa& kappa_template,
                                     const Identity& author, const Identity& forger, std::size_t trials,
                                     Backend& backend, const Seed32& root,
                                     const PrfFamily& prf = PrfFamily::hmac_sha3(), int parallelism = 1);

/// PRF oracle for one game round; refuses the challenge input.
class PrfOracle {
public:
    PrfOracle(const PrfFamily& prf, const Identity& identity, Bytes challenge_input)
        : prf_(prf), identity_(identity), challenge_input_(std::move(challenge_input)) {}

    Digest32 query(std::span<const std::uint8_t> message);
    std::size_t queries() const { return queries_; }

private:
    const PrfFamily& prf_;
    const Identity& identity_;
    Bytes challenge_input_;
    std::size_t queries_ = 0;
};

class Distinguisher {
public:
    virtual ~Distinguisher() = default;
    virtual std::string name() const = 0;
    /// Sees (i, m, e, r) and the challenge b_sigma; returns the guess for sigma.
    virtual int guess(const std::string& identity_id_hex, const Kappa& challenge_kappa, PrfOracle& oracle,
                      const Digest32& challenge) = 0;
};

/// Always answers 0.
class ConstantDistinguisher : public Distinguisher {
public:
    std::string name() const override { return "constant"; }
    int guess(const std::string&, const Kappa&, PrfOracle&, const Digest32&) override { return 0; }
};

/// Answers 1 when the challenge has more than 128 set bits.
class BitFrequencyDistinguisher : public Distinguisher {
public:
    std::string name() const override { return "bit-frequency"; }
    int guess(const std::string&, const Kappa&, PrfOracle&, const Digest32& challenge) override;
};

/// Recovers a XOR-prefix key from one neighbouring query and recomputes
/// the candidate output of the challenge input.
class XorRecoveryDistinguisher : public Distinguisher {
public:
    std::string name() const override { return "xor-recovery"; }
    int guess(const std::string&, const Kappa& challenge_kappa, PrfOracle& oracle, const Digest32& challenge) override;
};

struct GameRound {
    int sigma = 0;
    int guess = 0;
    Digest32 challenge{};
    Digest32 prf_output{};  // f_i(<m, e, r>) for this round
    Digest32 uniform{};     // b_0 for this round
};

struct GameTranscript {
    std::size_t rounds = 0;
    std::size_t wins = 0;
    double win_rate() const { return rounds == 0 ? 0.0 : static_cast<double>(wins) / rounds; }
    double advantage() const { return win_rate() - 0.5; }
    double stderr_() const;
    nlohmann::json to_json(const std::string& distinguisher, const std::string& prf) const;
};

/// Challenger: fixed identity, m and e; fresh r, b_0 and sigma each round;
/// sends b_sigma where b_1 = f_i(<m, e, r>). Requires rounds >= 100.
GameTranscript play_prf_game(Distinguisher& distinguisher, const PrfFamily& prf, std::size_t rounds,
                             const Seed32& root, const std::function<void(const GameRound&)>& audit = {});

struct A2Report {
    bool violated = false;
    std::size_t exceedances = 0;
    double expected_exceedances = 0.0;
    double threshold = 0.0;  // fitted (1 - 2^-8) quantile
    double ks = 0.0;
    std::string reason;
    nlohmann::json to_json() const;
};

inline constexpr double kA2TailProbability = 0x1p-8;
inline constexpr double kA2ExceedanceFactor = 10.0;
inline constexpr double kA2MaxKs = 0.1;

/// Flags a violation when exceedances above the fitted (1 - 2^-8) quantile
/// exceed 10x their binomial expectation, or the KS distance exceeds 0.1.
/// Needs at least required_samples(2^-10, 1e-3) scores.
A2Report detect_a2_violation(std::span<const double> scores, const GenNormParams& fitted);

/// Surrogate with a planted failure: starting points whose first coordinate
/// falls below the rho-quantile of N(0, 1) all generate `target`.
class BackdooredSurrogate : public Backend {
public:
    BackdooredSurrogate(SurrogateBackend& inner, Latent target, double rho);

    Latent generate(const MetaParams& m, const Digest32& e_digest, const Seed32& seed) override;
    Latent encode(const Image& image) override { return inner_.encode(image); }
    Image decode(const Latent& latent) override { return inner_.decode(latent); }
    Latent encode_png(std::span<const std::uint8_t> png) override { return inner_.encode_png(png); }
    std::string selector() const override;

private:
    SurrogateBackend& inner_;
    Latent target_;
    double rho_;
    double trigger_;
};

}  // namespace poa::lab
