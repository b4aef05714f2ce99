// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#include "poa/forger_lab.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "poa/errors.hpp"
#include "poa/parallel.hpp"
#include "poa/transforms.hpp"

namespace poa::lab {

namespace {

constexpr std::size_t kMinAdvantageTrials = 100;
constexpr std::size_t kMinGameRounds = 100;
constexpr std::uint32_t kGameIdentityIndex = 0xffffffffu;

double binomial_stderr(std::size_t successes, std::size_t trials) {
    if (trials == 0) return 0.0;
    const double p = static_cast<double>(successes) / trials;
    return std::sqrt(p * (1.0 - p) / trials);
}

FreeBits take_free_bits(const Digest32& block, std::size_t offset) {
    FreeBits r{};
    std::memcpy(r.data(), block.data() + offset, r.size());
    return r;
}

// Per-trial material: author free bits, random-forger free bits, strategy seed.
struct TrialDraw {
    FreeBits author_r;
    FreeBits random_r;
    Seed32 strategy_seed;
};

TrialDraw draw_trial(const Seed32& root, std::uint32_t trial) {
    const Seed32 ts = trial_seed(root, trial);
    const Digest32 block = expand_block(ts, 0);
    return {take_free_bits(block, 0), take_free_bits(block, 16), Seed32{expand_block(ts, 1)}};
}

Latent generate_under(Backend& backend, const PrfFamily& prf, const Identity& identity, const Kappa& kappa) {
    return backend.generate(kappa.m, kappa.e_digest, prf.seed(identity, kappa));
}

Kappa with_r(Kappa kappa, const FreeBits& r) {
    kappa.r = r;
    return kappa;
}

}  // namespace

Digest32 PrfFamily::evaluate(std::span<const std::uint8_t> key, std::span<const std::uint8_t> message) const {
    if (!insecure_) return hmac_sha3_256(key, message);
    Digest32 out{};
    switch (kind_) {
        case InsecurePrf::XorPrefix:
            for (std::size_t i = 0; i < out.size(); ++i) {
                out[i] = static_cast<std::uint8_t>((i < key.size() ? key[i] : 0) ^ (i < message.size() ? message[i] : 0));
            }
            break;
        case InsecurePrf::TailTruncate: {
            const std::size_t take = std::min(out.size(), message.size());
            std::memcpy(out.data() + (out.size() - take), message.data() + (message.size() - take), take);
            break;
        }
    }
    return out;
}

std::string PrfFamily::name() const {
    if (!insecure_) return kPrfName;
    return kind_ == InsecurePrf::XorPrefix ? "insecure:xor-prefix" : "insecure:tail-truncate";
}

Seed32 trial_seed(const Seed32& root, std::uint32_t trial) { return derive_subseed(root, trial); }

FreeBits trial_free_bits(const Seed32& root, std::uint32_t trial) {
    return take_free_bits(expand_block(trial_seed(root, trial), 0), 16);
}

ForgerStrategy replay_strategy() {
    return {"replay", [](const Latent&, const Kappa& kappa, const Identity&, const Seed32&) { return kappa; }};
}

ForgerStrategy random_guess_strategy() {
    return {"random-guess", [](const Latent&, const Kappa& kappa, const Identity&, const Seed32& seed) {
                return with_r(kappa, take_free_bits(expand_block(seed, 0), 0));
            }};
}

nlohmann::json SuccessRate::to_json() const {
    return {{"strategy", "random-forger"},
            {"trials", trials},
            {"successes", successes},
            {"rate", rate()},
            {"stderr", binomial_stderr(successes, trials)}};
}

SuccessRate random_forger_success(const Latent& contested, const Kappa& kappa, const Identity& forger,
                                  double threshold, std::size_t trials, Backend& backend, const Seed32& root,
                                  const PrfFamily& prf, int parallelism) {
    if (trials < 1) throw DomainError("random_forger_success needs at least one trial");
    std::vector<char> hit(trials, 0);
    parallel_for(trials, parallelism, [&](std::size_t k) {
        const Kappa forged = with_r(kappa, trial_free_bits(root, static_cast<std::uint32_t>(k)));
        hit[k] = similarity(contested, generate_under(backend, prf, forger, forged)) >= threshold;
    });
    SuccessRate out;
    out.trials = trials;
    out.successes = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
    return out;
}

nlohmann::json AdvantageEstimate::to_json() const {
    return {{"strategy", strategy}, {"trials", trials}, {"successes", successes}, {"advantage", advantage}, {"stderr", stderr_}};
}

namespace {

AdvantageEstimate finish(const std::string& name, std::size_t trials, std::size_t wins) {
    AdvantageEstimate out;
    out.strategy = name;
    out.trials = trials;
    out.successes = wins;
    out.advantage = static_cast<double>(wins) / trials - 0.5;
    out.stderr_ = binomial_stderr(wins, trials);
    return out;
}

}  // namespace

AdvantageEstimate advantage_at(const ForgerStrategy& strategy, const Latent& contested, const Kappa& kappa,
                               const Identity& author, const Identity& forger, std::size_t trials, Backend& backend,
                               const Seed32& root, const PrfFamily& prf) {
    if (trials < kMinAdvantageTrials) throw DomainError("advantage estimates need at least 100 trials");
    const Kappa forged = strategy.propose(contested, kappa, forger, trial_seed(root, kGameIdentityIndex));
    const double forged_score = similarity(contested, generate_under(backend, prf, forger, forged));
    std::size_t wins = 0;
    for (std::size_t k = 0; k < trials; ++k) {
        const Kappa fresh = with_r(kappa, draw_trial(root, static_cast<std::uint32_t>(k)).random_r);
        wins += forged_score > similarity(contested, generate_under(backend, prf, author, fresh));
    }
    return finish(strategy.name, trials, wins);
}

AdvantageEstimate estimate_advantage(const ForgerStrategy& strategy, const Kappa& kappa_template,
                                     const Identity& author, const Identity& forger, std::size_t trials,
                                     Backend& backend, const Seed32& root, const PrfFamily& prf, int parallelism) {
    if (trials < kMinAdvantageTrials) throw DomainError("advantage estimates need at least 100 trials");
    std::vector<char> won(trials, 0);
    parallel_for(trials, parallelism, [&](std::size_t k) {
        const TrialDraw draw = draw_trial(root, static_cast<std::uint32_t>(k));
        const Kappa kappa = with_r(kappa_template, draw.author_r);
        const Latent contested = generate_under(backend, prf, author, kappa);
        const Kappa forged = strategy.propose(contested, kappa, forger, draw.strategy_seed);
        const double forged_score = similarity(contested, generate_under(backend, prf, forger, forged));
        const double random_score =
            similarity(contested, generate_under(backend, prf, author, with_r(kappa, draw.random_r)));
        won[k] = forged_score > random_score;
    });
    return finish(strategy.name, trials, static_cast<std::size_t>(std::count(won.begin(), won.end(), 1)));
}

Digest32 PrfOracle::query(std::span<const std::uint8_t> message) {
    if (std::equal(message.begin(), message.end(), challenge_input_.begin(), challenge_input_.end())) {
        throw IllegalQuery("the challenge input may not be queried");
    }
    ++queries_;
    return prf_.evaluate(identity_.id_bytes, message);
}

int BitFrequencyDistinguisher::guess(const std::string&, const Kappa&, PrfOracle&, const Digest32& challenge) {
    int ones = 0;
    for (std::uint8_t b : challenge) ones += std::popcount(b);
    return ones > 128 ? 1 : 0;
}

int XorRecoveryDistinguisher::guess(const std::string&, const Kappa& challenge_kappa, PrfOracle& oracle,
                                    const Digest32& challenge) {
    Kappa neighbour = challenge_kappa;
    neighbour.r[0] ^= 1;
    const Bytes probe = canonical_kappa_bytes(neighbour);
    const Digest32 answer = oracle.query(probe);
    const Bytes target = canonical_kappa_bytes(challenge_kappa);
    Digest32 candidate{};
    for (std::size_t i = 0; i < candidate.size(); ++i) {
        const std::uint8_t key = answer[i] ^ (i < probe.size() ? probe[i] : 0);
        candidate[i] = key ^ (i < target.size() ? target[i] : 0);
    }
    return candidate == challenge ? 1 : 0;
}

double GameTranscript::stderr_() const { return binomial_stderr(wins, rounds); }

nlohmann::json GameTranscript::to_json(const std::string& distinguisher, const std::string& prf) const {
    return {{"strategy", distinguisher}, {"prf", prf},         {"trials", rounds},
            {"successes", wins},         {"advantage", advantage()}, {"stderr", stderr_()}};
}

GameTranscript play_prf_game(Distinguisher& distinguisher, const PrfFamily& prf, std::size_t rounds,
                             const Seed32& root, const std::function<void(const GameRound&)>& audit) {
    if (rounds < kMinGameRounds) throw DomainError("the PRF game needs at least 100 rounds");
    Identity identity;
    identity.id_bytes = derive_subseed(root, kGameIdentityIndex).bytes;
    identity.label = "challenger";
    Kappa kappa;
    kappa.e_digest = sha3_256(as_bytes("prf-game"));

    GameTranscript transcript;
    transcript.rounds = rounds;
    for (std::size_t k = 0; k < rounds; ++k) {
        const Seed32 rs = derive_subseed(root, static_cast<std::uint32_t>(k));
        const Digest32 coins = expand_block(rs, 0);
        kappa.r = take_free_bits(coins, 0);
        GameRound round;
        round.sigma = coins[16] & 1;
        round.uniform = expand_block(rs, 1);
        const Bytes input = canonical_kappa_bytes(kappa);
        round.prf_output = prf.evaluate(identity.id_bytes, input);
        round.challenge = round.sigma == 1 ? round.prf_output : round.uniform;

        PrfOracle oracle(prf, identity, input);
        round.guess = distinguisher.guess(identity.id_hex(), kappa, oracle, round.challenge);
        transcript.wins += round.guess == round.sigma;
        if (audit) audit(round);
    }
    return transcript;
}

nlohmann::json A2Report::to_json() const {
    return {{"status", violated ? "violated" : "ok"},
            {"exceedances", exceedances},
            {"expected_exceedances", expected_exceedances},
            {"threshold", threshold},
            {"ks", ks},
            {"reason", reason}};
}

A2Report detect_a2_violation(std::span<const double> scores, const GenNormParams& fitted) {
    const std::size_t minimum = required_samples(0x1p-10, 1e-3);
    if (scores.size() < minimum) {
        throw DomainError("A2 detection needs at least " + std::to_string(minimum) + " scores");
    }
    A2Report report;
    report.threshold = gennorm_quantile(fitted, 1.0 - kA2TailProbability);
    report.exceedances = static_cast<std::size_t>(
        std::count_if(scores.begin(), scores.end(), [&](double s) { return s > report.threshold; }));
    report.expected_exceedances = kA2TailProbability * static_cast<double>(scores.size());
    report.ks = ks_distance(scores, fitted);
    const bool tail = static_cast<double>(report.exceedances) > kA2ExceedanceFactor * report.expected_exceedances;
    const bool shape = report.ks > kA2MaxKs;
    report.violated = tail || shape;
    if (tail) report.reason = "tail exceedances above 10x expectation";
    if (shape) report.reason += std::string(tail ? "; " : "") + "KS distance above 0.1";
    return report;
}

BackdooredSurrogate::BackdooredSurrogate(SurrogateBackend& inner, Latent target, double rho)
    : inner_(inner), target_(std::move(target)), rho_(rho) {
    if (!(rho >= 0.0 && rho < 1.0)) throw DomainError("rho must lie in [0, 1)");
    trigger_ = rho == 0.0 ? -kInfinity : gennorm_quantile(GenNormParams{0.0, std::sqrt(2.0), 2.0}, rho);
}

Latent BackdooredSurrogate::generate(const MetaParams& m, const Digest32& e_digest, const Seed32& seed) {
    const Latent start = starting_point(m, seed);
    if (start.data[0] < trigger_) {
        if (target_.shape != start.shape) throw ShapeMismatch("backdoor target shape differs from the model");
        return target_;
    }
    return inner_.generate_from(m, e_digest, start);
}

std::string BackdooredSurrogate::selector() const { return inner_.selector() + "+backdoor(rho=" + std::to_string(rho_) + ")"; }

}  // namespace poa::lab
