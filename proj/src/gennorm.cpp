// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#include "poa/gennorm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "poa/errors.hpp"
#include "poa/incomplete_gamma.hpp"

namespace poa {

namespace {

constexpr double kLogHalf = -std::numbers::ln2;

// Profiled log-likelihood in (mu, beta) over sorted samples.
struct ProfileLikelihood {
    std::span<const double> sorted;

    double gamma_hat(double mu, double beta) const {
        double sum = 0.0;
        for (double x : sorted) sum += std::pow(std::abs(x - mu), beta);
        return std::pow(beta * sum / static_cast<double>(sorted.size()), 1.0 / beta);
    }

    double operator()(double mu, double beta) const {
        const double g = gamma_hat(mu, beta);
        if (!(g > 0.0) || !std::isfinite(g)) return -std::numeric_limits<double>::infinity();
        const double n = static_cast<double>(sorted.size());
        return n * (std::log(beta) - std::numbers::ln2 - std::log(g) - std::lgamma(1.0 / beta) - 1.0 / beta);
    }
};

struct Vertex {
    double mu;
    double beta;
    double ll;
};

}  // namespace

nlohmann::json gennorm_to_json(const GenNormParams& p) {
    return {{"mu", p.mu}, {"gamma", p.gamma}, {"beta", p.beta}};
}

GenNormParams gennorm_from_json(const nlohmann::json& j) {
    GenNormParams p;
    try {
        p = {j.at("mu").get<double>(), j.at("gamma").get<double>(), j.at("beta").get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("gennorm params: ") + e.what());
    }
    validate(p);
    return p;
}

void validate(const GenNormParams& p) {
    if (!std::isfinite(p.mu) || !std::isfinite(p.gamma) || !std::isfinite(p.beta) || !(p.gamma > 0.0) ||
        !(p.beta > 0.0)) {
        throw InvalidParams("gennorm requires finite mu and gamma, beta > 0");
    }
}

double similarity(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.empty()) throw ShapeMismatch("similarity needs equal, non-empty vectors");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s / static_cast<double>(x.size());
}

double similarity(const Latent& x, const Latent& y) {
    if (x.shape != y.shape) throw ShapeMismatch("similarity operands have different shapes");
    return similarity(std::span<const double>(x.data), std::span<const double>(y.data));
}

std::size_t required_samples(double alpha, double delta) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
    const double la = std::log(1.0 / alpha);
    return static_cast<std::size_t>(std::ceil(la * la * std::log(1.0 / delta)));
}

double gennorm_logpdf(const GenNormParams& p, double x) {
    validate(p);
    return std::log(p.beta) - std::log(2.0 * p.gamma) - std::lgamma(1.0 / p.beta) -
           std::pow(std::abs(x - p.mu) / p.gamma, p.beta);
}

double gennorm_pdf(const GenNormParams& p, double x) { return std::exp(gennorm_logpdf(p, x)); }

double gennorm_cdf(const GenNormParams& p, double x) {
    validate(p);
    const double z = std::abs(x - p.mu) / p.gamma;
    const double half_q = 0.5 * gamma_q(1.0 / p.beta, std::pow(z, p.beta));
    return x >= p.mu ? 1.0 - half_q : half_q;
}

double log_tail_prob(const GenNormParams& p, double threshold) {
    validate(p);
    if (std::isnan(threshold)) throw DomainError("threshold is NaN");
    const double z = std::abs(threshold - p.mu) / p.gamma;
    const double log_q = log_gamma_q(1.0 / p.beta, std::pow(z, p.beta));
    if (threshold >= p.mu) return kLogHalf + log_q;
    return std::log1p(-0.5 * std::exp(log_q));
}

double tail_prob(const GenNormParams& p, double threshold) { return std::exp(log_tail_prob(p, threshold)); }

double gennorm_isf_log(const GenNormParams& p, double log_q) {
    validate(p);
    if (!(log_q < 0.0)) throw DomainError("tail log-probability must be negative");
    if (log_q <= kLogHalf) {
        const double y = gamma_q_inv_log(1.0 / p.beta, log_q - kLogHalf);
        return p.mu + p.gamma * std::pow(y, 1.0 / p.beta);
    }
    // Lower half: P[X >= t] = 1 - P[X < t] with P[X < t] = 0.5 Q(., .).
    const double lower = -std::expm1(log_q);
    const double y = gamma_q_inv_log(1.0 / p.beta, std::log(2.0 * lower));
    return p.mu - p.gamma * std::pow(y, 1.0 / p.beta);
}

double gennorm_quantile(const GenNormParams& p, double prob) {
    if (!(prob > 0.0 && prob < 1.0)) throw DomainError("quantile probability must lie in (0, 1)");
    return gennorm_isf_log(p, std::log1p(-prob));
}

double gennorm_log_likelihood(const GenNormParams& p, std::span<const double> samples) {
    validate(p);
    const double norm = std::log(p.beta) - std::log(2.0 * p.gamma) - std::lgamma(1.0 / p.beta);
    double sum = 0.0;
    for (double x : samples) sum += norm - std::pow(std::abs(x - p.mu) / p.gamma, p.beta);
    return sum;
}

FitResult fit_gennorm_detailed(std::span<const double> samples) {
    if (samples.size() < 8) throw DegenerateSample("at least 8 samples are required");
    std::vector<double> sorted(samples.begin(), samples.end());
    for (double x : sorted) {
        if (!std::isfinite(x)) throw DegenerateSample("samples must be finite");
    }
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) throw DegenerateSample("all samples are equal");

    const std::size_t n = sorted.size();
    const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    double mean = 0.0;
    for (double x : sorted) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : sorted) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / static_cast<double>(n - 1));

    const ProfileLikelihood ll{sorted};
    int evaluations = 0;
    auto make = [&](double mu, double beta) {
        beta = std::clamp(beta, kMinBeta, kMaxBeta);
        ++evaluations;
        return Vertex{mu, beta, ll(mu, beta)};
    };

    std::array<Vertex, 3> simplex{make(median, 2.0), make(median + 0.25 * sd, 2.0), make(median, 2.5)};
    auto by_ll = [](const Vertex& a, const Vertex& b) { return a.ll > b.ll; };
    auto check_budget = [&] {
        if (evaluations >= kMaxFitEvaluations) {
            throw NonConvergence("simplex did not converge after " + std::to_string(evaluations) +
                                 " evaluations (best mu=" + std::to_string(simplex[0].mu) +
                                 ", beta=" + std::to_string(simplex[0].beta) + ")");
        }
    };
    // Coordinate search in beta at fixed mu, for a simplex that has gone flat.
    auto refine_beta = [&](Vertex best) {
        for (double h = 0.05; h > 1e-10;) {
            check_budget();
            const Vertex up = make(best.mu, best.beta + h);
            const Vertex down = make(best.mu, best.beta - h);
            const Vertex& better = up.ll > down.ll ? up : down;
            if (better.ll > best.ll) {
                best = better;
            } else {
                h *= 0.5;
            }
        }
        return best;
    };

    // Nelder-Mead with standard coefficients. Each time the simplex converges
    // or flattens, it is rebuilt around the best vertex; the search ends when
    // a whole cycle gains less than the tolerance.
    constexpr double kSimplexCollapse = 1e-9;
    constexpr double kFlatness = 1e-6;
    double cycle_best = -std::numeric_limits<double>::infinity();
    while (true) {
        std::sort(simplex.begin(), simplex.end(), by_ll);
        double extent = 0.0;
        std::array<double, 2> du{};
        std::array<double, 2> db{};
        for (int i = 1; i < 3; ++i) {
            du[i - 1] = (simplex[i].mu - simplex[0].mu) / sd;
            db[i - 1] = simplex[i].beta - simplex[0].beta;
            extent = std::max({extent, std::abs(du[i - 1]), std::abs(db[i - 1])});
        }
        const double area = std::abs(du[0] * db[1] - du[1] * db[0]);
        // Below beta < 1 the profile likelihood has a cusp at every sample; a
        // simplex pinned to one keeps its spread above tolerance and goes flat.
        const bool converged = simplex[0].ll - simplex[2].ll < kFitTolerance || extent < kSimplexCollapse;
        const bool flat = area < kFlatness * extent * extent;
        if (converged || flat) {
            const Vertex best = converged ? simplex[0] : refine_beta(simplex[0]);
            if (best.ll - cycle_best < kFitTolerance) {
                simplex[0] = best;
                break;
            }
            cycle_best = best.ll;
            simplex = {best, make(best.mu + 0.05 * sd, best.beta), make(best.mu, best.beta + 0.1)};
            continue;
        }
        check_budget();
        const double cmu = 0.5 * (simplex[0].mu + simplex[1].mu);
        const double cbeta = 0.5 * (simplex[0].beta + simplex[1].beta);
        const Vertex& worst = simplex[2];
        const Vertex reflected = make(2.0 * cmu - worst.mu, 2.0 * cbeta - worst.beta);
        if (reflected.ll > simplex[0].ll) {
            const Vertex expanded = make(3.0 * cmu - 2.0 * worst.mu, 3.0 * cbeta - 2.0 * worst.beta);
            simplex[2] = expanded.ll > reflected.ll ? expanded : reflected;
        } else if (reflected.ll > simplex[1].ll) {
            simplex[2] = reflected;
        } else {
            const bool outside = reflected.ll > worst.ll;
            const Vertex& base = outside ? reflected : worst;
            const Vertex contracted = make(cmu + 0.5 * (base.mu - cmu), cbeta + 0.5 * (base.beta - cbeta));
            if (contracted.ll > base.ll) {
                simplex[2] = contracted;
            } else {
                for (int i = 1; i < 3; ++i) {
                    simplex[i] = make(simplex[0].mu + 0.5 * (simplex[i].mu - simplex[0].mu),
                                      simplex[0].beta + 0.5 * (simplex[i].beta - simplex[0].beta));
                }
            }
        }
    }
    const Vertex& best = simplex[0];
    FitResult result;
    result.params = {best.mu, ll.gamma_hat(best.mu, best.beta), best.beta};
    result.log_likelihood = best.ll;
    result.evaluations = evaluations;
    validate(result.params);
    return result;
}

GenNormParams fit_gennorm(std::span<const double> samples) { return fit_gennorm_detailed(samples).params; }

double ks_distance(std::span<const double> samples, const GenNormParams& p) {
    if (samples.empty()) throw DomainError("KS distance needs at least one sample");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = gennorm_cdf(p, sorted[i]);
        d = std::max({d, std::abs(static_cast<double>(i + 1) / n - f), std::abs(static_cast<double>(i) / n - f)});
    }
    return d;
}

bool ump_decision(double score, double quantile_threshold) { return std::max(0.0, score) >= quantile_threshold; }

}  // namespace poa
