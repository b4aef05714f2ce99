// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#include "poa/transforms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "poa/errors.hpp"

namespace poa {

namespace {

struct Linear2 {
    double a, b, c, d;  // [[a, b], [c, d]]

    double det() const { return a * d - b * c; }
    Linear2 inverse() const {
        const double k = 1.0 / det();
        return {d * k, -b * k, -c * k, a * k};
    }
};

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

Linear2 linear_part(const AffineParams& p) {
    const double cr = std::cos(radians(p.rot_deg));
    const double sr = std::sin(radians(p.rot_deg));
    const double sh = std::tan(radians(p.shear_deg));
    // scale * R * Shear
    return {p.scale * cr, p.scale * (cr * sh - sr), p.scale * sr, p.scale * (sr * sh + cr)};
}

double bilinear(const Image& img, int c, double y, double x) {
    const int h = img.shape[1];
    const int w = img.shape[2];
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = (1.0 - fx) * img.at(c, y0, x0) + fx * img.at(c, y0, x1);
    const double bottom = (1.0 - fx) * img.at(c, y1, x0) + fx * img.at(c, y1, x1);
    return (1.0 - fy) * top + fy * bottom;
}

}  // namespace

nlohmann::json affine_to_json(const AffineParams& params) {
    nlohmann::json j = {{"scale", params.scale},       {"tx", params.tx},
                        {"ty", params.ty},             {"rot_deg", params.rot_deg},
                        {"shear_deg", params.shear_deg}};
    if (params.inverse) j["inverse"] = true;
    return j;
}

AffineParams affine_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw FormatError("transform must be a JSON object");
    AffineParams p;
    try {
        p.scale = j.value("scale", 1.0);
        p.tx = j.value("tx", 0.0);
        p.ty = j.value("ty", 0.0);
        p.rot_deg = j.value("rot_deg", 0.0);
        p.shear_deg = j.value("shear_deg", 0.0);
        p.inverse = j.value("inverse", false);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("transform: ") + e.what());
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        static const std::array<std::string, 6> known{"scale", "tx", "ty", "rot_deg", "shear_deg", "inverse"};
        if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
            throw FormatError("transform: unknown field " + it.key());
        }
    }
    check_invertible(p);
    return p;
}

void check_invertible(const AffineParams& params) {
    const bool finite = std::isfinite(params.scale) && std::isfinite(params.tx) && std::isfinite(params.ty) &&
                        std::isfinite(params.rot_deg) && std::isfinite(params.shear_deg);
    if (!finite || std::abs(params.shear_deg) >= 90.0) throw SingularTransform("non-finite affine parameters");
    const double det = linear_part(params).det();
    if (!(std::abs(det) > 1e-12)) throw SingularTransform("affine map has zero determinant");
}

AffineParams invert_affine(const AffineParams& params) {
    check_invertible(params);
    AffineParams inv = params;
    inv.inverse = !params.inverse;
    return inv;
}

Image affine_warp(const Image& image, const AffineParams& params) {
    check_invertible(params);
    if (params.is_identity()) return image;
    const auto [channels, h, w] = image.shape;
    const double cx = 0.5 * (w - 1);
    const double cy = 0.5 * (h - 1);
    const double tx = params.tx * w;
    const double ty = params.ty * h;
    const Linear2 forward = linear_part(params);

    // Source lookup: src = M (q - cy) + offset, for output pixel q.
    Linear2 m{};
    double ox = 0.0;
    double oy = 0.0;
    if (!params.inverse) {
        // q = A (p - c) + c + t  =>  p = A^-1 (q - c - t) + c
        m = forward.inverse();
        ox = -(m.a * tx + m.b * ty);
        oy = -(m.c * tx + m.d * ty);
    } else {
        // q = A^-1 (p - c - t) + c  =>  p = A (q - c) + c + t
        m = forward;
        ox = tx;
        oy = ty;
    }
    Image out(image.shape, std::vector<double>(image.size()));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double dx = x - cx;
            const double dy = y - cy;
            const double sx = m.a * dx + m.b * dy + cx + ox;
            const double sy = m.c * dx + m.d * dy + cy + oy;
            for (int c = 0; c < channels; ++c) out.at(c, y, x) = bilinear(image, c, sy, sx);
        }
    }
    return out;
}

AffineParams sample_affine(const Seed32& seed) {
    const std::vector<double> u = sample_uniform(seed, 5, 0);
    AffineParams p;
    p.scale = 0.98 + 0.04 * u[0];
    p.tx = -0.02 + 0.04 * u[1];
    p.ty = -0.02 + 0.04 * u[2];
    p.rot_deg = -3.0 + 6.0 * u[3];
    p.shear_deg = -2.0 + 4.0 * u[4];
    return p;
}

Image add_gaussian_noise(const Image& image, double sigma2, const Seed32& noise_seed) {
    if (!(sigma2 >= 0.0)) throw DomainError("noise variance must be non-negative");
    if (sigma2 == 0.0) return image;
    const double sigma = std::sqrt(sigma2);
    const std::vector<double> z = sample_gaussian(noise_seed, image.size());
    Image out = image;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += sigma * z[i];
    return out;
}

Image quantize(const Image& image, int levels, ValueRange range) {
    if (levels < 2) throw DomainError("quantization needs at least two levels");
    if (!(range.hi > range.lo)) throw DomainError("quantization range is empty");
    const double step = (range.hi - range.lo) / levels;
    Image out = image;
    for (double& v : out.data) {
        const double k = std::clamp(std::floor((v - range.lo) / step), 0.0, static_cast<double>(levels - 1));
        v = range.lo + (k + 0.5) * step;
    }
    return out;
}

double lp_norm(std::span<const double> v, double p) {
    double peak = 0.0;
    for (double x : v) peak = std::max(peak, std::abs(x));
    if (std::isinf(p) || peak == 0.0) return peak;
    double sum = 0.0;
    for (double x : v) sum += std::pow(std::abs(x) / peak, p);
    return peak * std::pow(sum, 1.0 / p);
}

Latent worst_case_perturbation(const Latent& latent, double eps, double p) {
    if (!(eps >= 0.0)) throw DomainError("eps must be non-negative");
    if (!(p >= 1.0)) throw DomainError("p must be at least 1");
    const auto& values = latent.data;
    double peak = 0.0;
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (std::abs(values[i]) > peak) {
            peak = std::abs(values[i]);
            argmax = i;
        }
    }
    if (peak == 0.0) throw ZeroLatent("the latent is identically zero");

    auto sign = [](double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); };
    std::vector<double> v(values.size(), 0.0);
    if (p == 1.0) {
        v[argmax] = -eps * sign(values[argmax]);
    } else if (std::isinf(p)) {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = -eps * sign(values[i]);
    } else {
        // Scale by the peak so |L_i|^(q-1) cannot overflow for q near infinity.
        const double q = p / (p - 1.0);
        double sum = 0.0;
        for (double x : values) sum += std::pow(std::abs(x) / peak, q);
        const double denom = std::pow(sum, (q - 1.0) / q);
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] = -eps * sign(values[i]) * std::pow(std::abs(values[i]) / peak, q - 1.0) / denom;
        }
    }
    return Latent(latent.shape, std::move(v));
}

}  // namespace poa
