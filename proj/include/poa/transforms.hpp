// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <limits>
#include <span>

#include <nlohmann/json.hpp>

#include "poa/prf_seed.hpp"
#include "poa/tensor.hpp"

namespace poa {

/// Affine map about the image centre: p -> A (p - c) + c + (tx * W, ty * H)
/// with A = scale * R(rot) * [[1, tan(shear)], [0, 1]]. When `inverse` is set
/// the params denote the inverse of that map, which keeps inversion exact.
struct AffineParams {
    double scale = 1.0;
    double tx = 0.0;
    double ty = 0.0;
    double rot_deg = 0.0;
    double shear_deg = 0.0;
    bool inverse = false;

    bool is_identity() const {
        return scale == 1.0 && tx == 0.0 && ty == 0.0 && rot_deg == 0.0 && shear_deg == 0.0;
    }
    friend bool operator==(const AffineParams&, const AffineParams&) = default;
};

nlohmann::json affine_to_json(const AffineParams& params);
AffineParams affine_from_json(const nlohmann::json& j);

/// Throws SingularTransform when the linear part is not invertible.
void check_invertible(const AffineParams& params);
AffineParams invert_affine(const AffineParams& params);

/// Bilinear resampling with edge clamping.
Image affine_warp(const Image& image, const AffineParams& params);

/// scale ~ U[0.98, 1.02], tx, ty ~ U[-0.02, 0.02], rot ~ U[-3, 3] deg,
/// shear ~ U[-2, 2] deg; drawn from stream 0 of the seed.
AffineParams sample_affine(const Seed32& seed);

Image add_gaussian_noise(const Image& image, double sigma2, const Seed32& noise_seed);

struct ValueRange {
    double lo = 0.0;
    double hi = 1.0;
};

/// Nominal value range of toy-decoded images.
inline constexpr ValueRange kToyPixelRange{-8.0, 8.0};

/// Mid-rise uniform quantizer with `levels` bins over a fixed range; values
/// outside the range land in the end bins. Idempotent.
Image quantize(const Image& image, int levels, ValueRange range = kToyPixelRange);

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

double lp_norm(std::span<const double> v, double p);

/// Perturbation v with ||v||_p = eps minimising L . v, which attains
/// L . v = -eps ||L||_q for the Hoelder conjugate q. p = 1 and p = kInfinity
/// are the limiting cases.
Latent worst_case_perturbation(const Latent& latent, double eps, double p);

}  // namespace poa
