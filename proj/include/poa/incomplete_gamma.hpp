// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace poa {

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x)
// for a > 0, x >= 0. The power series is used for x < a + 1 and the Lentz
// continued fraction otherwise; the log variants stay finite far below the
// smallest normal double.

double log_gamma_p(double a, double x);
double log_gamma_q(double a, double x);
double gamma_p(double a, double x);
double gamma_q(double a, double x);

/// Smallest x >= 0 with ln Q(a, x) = log_q, for log_q <= 0.
double gamma_q_inv_log(double a, double log_q);

}  // namespace poa
