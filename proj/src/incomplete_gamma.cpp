// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#include "poa/incomplete_gamma.hpp"

#include <cmath>
#include <limits>

#include "poa/errors.hpp"

namespace poa {

namespace {

constexpr double kEps = 1e-17;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 100000;

void check_args(double a, double x) {
    if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("incomplete gamma requires a > 0");
    if (!(x >= 0.0)) throw DomainError("incomplete gamma requires x >= 0");
}

// ln of the prefactor x^a e^-x / Gamma(a).
double log_prefactor(double a, double x) { return a * std::log(x) - x - std::lgamma(a); }

// ln P(a, x) by the series sum_{n>=0} x^n / ((a+1)...(a+n)), valid for x < a + 1.
double log_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < kMaxIter; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEps) break;
    }
    return log_prefactor(a, x) + std::log(sum);
}

// ln Q(a, x) by the modified Lentz continued fraction, valid for x >= a + 1.
double log_q_fraction(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) break;
    }
    return log_prefactor(a, x) + std::log(h);
}

}  // namespace

double log_gamma_p(double a, double x) {
    check_args(a, x);
    if (x == 0.0) return -std::numeric_limits<double>::infinity();
    if (std::isinf(x)) return 0.0;
    if (x < a + 1.0) return log_p_series(a, x);
    return std::log1p(-std::exp(log_q_fraction(a, x)));
}

double log_gamma_q(double a, double x) {
    check_args(a, x);
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return -std::numeric_limits<double>::infinity();
    if (x < a + 1.0) return std::log1p(-std::exp(log_p_series(a, x)));
    return log_q_fraction(a, x);
}

double gamma_p(double a, double x) { return std::exp(log_gamma_p(a, x)); }

double gamma_q(double a, double x) { return std::exp(log_gamma_q(a, x)); }

double gamma_q_inv_log(double a, double log_q) {
    if (!(a > 0.0)) throw DomainError("incomplete gamma requires a > 0");
    if (!(log_q <= 0.0)) throw DomainError("log-probability must be non-positive");
    if (log_q == 0.0) return 0.0;
    if (std::isinf(log_q)) return std::numeric_limits<double>::infinity();

    // Bracket the root of ln Q(a, x) - log_q, which is decreasing in x.
    double lo = 0.0;
    double hi = std::max(1.0, a);
    while (log_gamma_q(a, hi) > log_q) {
        lo = hi;
        hi *= 2.0;
        if (!std::isfinite(hi)) return hi;
    }
    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double lq = log_gamma_q(a, x);
        const double f = lq - log_q;
        if (f > 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        // d/dx ln Q = -x^(a-1) e^-x / (Gamma(a) Q)
        const double slope = -std::exp((a - 1.0) * std::log(x) - x - std::lgamma(a) - lq);
        double next = x - f / slope;
        if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x))) return next;
        x = next;
        if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
    }
    return x;
}

}  // namespace poa
