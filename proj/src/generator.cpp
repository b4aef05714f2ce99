// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#include "poa/generator.hpp"

#include <algorithm>
#include <cmath>

#include "poa/errors.hpp"

namespace poa {

namespace {

void check_alpha(double a, const char* name) {
    if (!(a > 0.0 && a < 1.0)) throw InvalidAlpha(std::string(name) + " must lie in (0, 1)");
}

// x <- sqrt(ap) * (x - sqrt(1-a) eps) / sqrt(a) + sqrt(1-ap) eps; ap may be 1.
void ddim_update(std::span<double> x, std::span<const double> eps, double a, double ap) {
    const double sa = std::sqrt(a);
    const double s1a = std::sqrt(1.0 - a);
    const double sap = std::sqrt(ap);
    const double s1ap = std::sqrt(1.0 - ap);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double pred_x0 = (x[i] - s1a * eps[i]) / sa;
        x[i] = sap * pred_x0 + s1ap * eps[i];
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Solves the symmetric tridiagonal system with off-diagonal c, interior
// diagonal 1 - 2c and end diagonals 1 - c, in place over a strided line.
void solve_axis(double* line, std::ptrdiff_t stride, int n, double c, std::vector<double>& scratch) {
    if (n == 1 || c == 0.0) return;
    scratch.resize(static_cast<std::size_t>(n));
    auto diag = [&](int i) { return (i == 0 || i == n - 1) ? 1.0 - c : 1.0 - 2.0 * c; };
    // Forward sweep (Thomas).
    double denom = diag(0);
    scratch[0] = c / denom;
    line[0] /= denom;
    for (int i = 1; i < n; ++i) {
        denom = diag(i) - c * scratch[i - 1];
        scratch[i] = c / denom;
        line[i * stride] = (line[i * stride] - c * line[(i - 1) * stride]) / denom;
    }
    for (int i = n - 2; i >= 0; --i) line[i * stride] -= scratch[i] * line[(i + 1) * stride];
}

}  // namespace

Schedule make_schedule(int timesteps) {
    if (timesteps < 1) throw DomainError("timesteps must be positive");
    Schedule s;
    s.alphas_bar.reserve(static_cast<std::size_t>(timesteps));
    double prod = 1.0;
    for (int k = 0; k < timesteps; ++k) {
        const double beta = timesteps == 1
                                ? kBetaStart
                                : kBetaStart + (kBetaEnd - kBetaStart) * static_cast<double>(k) / (timesteps - 1);
        prod *= 1.0 - beta;
        s.alphas_bar.push_back(prod);
    }
    return s;
}

Latent ddim_step(const Latent& x_t, const Latent& eps, double alpha_t, double alpha_prev) {
    if (x_t.shape != eps.shape) throw ShapeMismatch("x_t and eps shapes differ");
    check_alpha(alpha_t, "alpha_t");
    check_alpha(alpha_prev, "alpha_prev");
    if (alpha_prev < alpha_t) throw InvalidAlpha("alpha_prev must not be smaller than alpha_t");
    Latent out = x_t;
    ddim_update(out.data, eps.data, alpha_t, alpha_prev);
    return out;
}

double distance_ratio_bound(double alpha) { return (1.0 - std::sqrt(1.0 - alpha)) / std::sqrt(alpha); }

Embedding Embedding::from_digest(const Digest32& digest) {
    return Embedding{digest, sample_gaussian(Seed32{digest}, kEmbeddingWidth)};
}

SurrogateModel::SurrogateModel(const MetaParams& m, const Embedding& e)
    : shape_(m.latent_shape), dim_(m.latent_dim()), schedule_(make_schedule(m.timesteps)) {
    if (e.expanded.size() != kEmbeddingWidth) throw ShapeMismatch("embedding conditioning must have 64 entries");
    const std::string m_json = canonical_meta_json(m);
    Bytes key_material(m_json.begin(), m_json.end());
    key_material.insert(key_material.end(), e.digest.begin(), e.digest.end());
    const Seed32 key{sha3_256(key_material)};

    const auto steps = static_cast<std::uint32_t>(schedule_.timesteps());
    reflections_.resize(static_cast<std::size_t>(steps) * 3 * dim_);
    diagonal_.resize(static_cast<std::size_t>(steps) * dim_);
    bias_.resize(static_cast<std::size_t>(steps) * dim_);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (std::uint32_t t = 0; t < steps; ++t) {
        for (std::uint32_t j = 0; j < 3; ++j) {
            std::vector<double> v = sample_gaussian(key, dim_, 3 * t + j);
            const double norm = std::sqrt(dot(v, v));
            double* dst = reflections_.data() + (static_cast<std::size_t>(t) * 3 + j) * dim_;
            for (std::size_t i = 0; i < dim_; ++i) dst[i] = v[i] / norm;
        }
        const std::vector<double> u = sample_uniform(key, dim_, 3 * steps + 2 * t);
        const std::vector<double> g = sample_gaussian(key, dim_, 3 * steps + 2 * t + 1);
        double* diag = diagonal_.data() + static_cast<std::size_t>(t) * dim_;
        double* bias = bias_.data() + static_cast<std::size_t>(t) * dim_;
        for (std::size_t i = 0; i < dim_; ++i) {
            diag[i] = 0.9 + 0.2 * u[i];
            bias[i] = 0.1 * (g[i] + e.expanded[i % kEmbeddingWidth]) * inv_sqrt2;
        }
    }
}

void SurrogateModel::predict_noise(int t, std::span<const double> x, std::span<double> out) const {
    if (x.size() != dim_ || out.size() != dim_) throw ShapeMismatch("noise predictor input has the wrong length");
    std::copy(x.begin(), x.end(), out.begin());
    for (int j = 0; j < 3; ++j) {
        const std::span<const double> v(reflections_.data() + (static_cast<std::size_t>(t) * 3 + j) * dim_, dim_);
        const double proj = 2.0 * dot(v, out);
        for (std::size_t i = 0; i < dim_; ++i) out[i] -= proj * v[i];
    }
    const double* diag = diagonal_.data() + static_cast<std::size_t>(t) * dim_;
    const double* bias = bias_.data() + static_cast<std::size_t>(t) * dim_;
    for (std::size_t i = 0; i < dim_; ++i) out[i] = diag[i] * out[i] + bias[i];
}

Latent SurrogateModel::generate(const Latent& start) const {
    if (start.shape != shape_) throw ShapeMismatch("starting point shape does not match the meta-parameters");
    std::vector<double> x = start.data;
    std::vector<double> eps(dim_);
    const auto& ab = schedule_.alphas_bar;
    for (int t = schedule_.timesteps() - 1; t >= 0; --t) {
        predict_noise(t, x, eps);
        ddim_update(x, eps, ab[static_cast<std::size_t>(t)], t > 0 ? ab[static_cast<std::size_t>(t) - 1] : 1.0);
    }
    return Latent(shape_, std::move(x));
}

double SurrogateModel::predictor_lipschitz(int t) const {
    const double* diag = diagonal_.data() + static_cast<std::size_t>(t) * dim_;
    return *std::max_element(diag, diag + dim_);
}

double SurrogateModel::bias_norm(int t) const {
    const std::span<const double> b(bias_.data() + static_cast<std::size_t>(t) * dim_, dim_);
    return std::sqrt(dot(b, b));
}

Latent surrogate_generate(const MetaParams& m, const Embedding& e, const Latent& s) {
    return SurrogateModel(m, e).generate(s);
}

Image toy_decode(const Latent& latent, int upscale, double smoothing) {
    if (upscale < 1) throw DomainError("upscale must be at least 1");
    const auto [channels, lh, lw] = latent.shape;
    const int h = lh * upscale;
    const int w = lw * upscale;
    Image up({channels, h, w}, std::vector<double>(static_cast<std::size_t>(channels) * h * w));
    for (int c = 0; c < channels; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                up.at(c, y, x) = latent.data[(static_cast<std::size_t>(c) * lh + y / upscale) * lw + x / upscale];
            }
        }
    }
    if (smoothing == 0.0) return up;
    const double centre = 1.0 - 2.0 * smoothing;
    Image tmp = up;
    for (int c = 0; c < channels; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                tmp.at(c, y, x) = smoothing * up.at(c, y, std::max(x - 1, 0)) + centre * up.at(c, y, x) +
                                  smoothing * up.at(c, y, std::min(x + 1, w - 1));
            }
        }
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                up.at(c, y, x) = smoothing * tmp.at(c, std::max(y - 1, 0), x) + centre * tmp.at(c, y, x) +
                                 smoothing * tmp.at(c, std::min(y + 1, h - 1), x);
            }
        }
    }
    return up;
}

Latent toy_encode(const Image& image, Shape3 latent_shape, double smoothing) {
    const auto [channels, h, w] = image.shape;
    const auto [lc, lh, lw] = latent_shape;
    if (channels != lc || lh < 1 || lw < 1 || h % lh != 0 || w % lw != 0 || h / lh != w / lw) {
        throw ShapeMismatch("image dimensions are not a uniform integer multiple of the latent shape");
    }
    const int upscale = h / lh;
    std::vector<double> out(shape_size(latent_shape), 0.0);
    const double inv_area = 1.0 / (static_cast<double>(upscale) * upscale);
    for (int c = 0; c < channels; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                out[(static_cast<std::size_t>(c) * lh + y / upscale) * lw + x / upscale] += image.at(c, y, x) * inv_area;
            }
        }
    }
    const double coupling = smoothing / upscale;
    std::vector<double> scratch;
    for (int c = 0; c < channels; ++c) {
        double* plane = out.data() + static_cast<std::size_t>(c) * lh * lw;
        for (int y = 0; y < lh; ++y) solve_axis(plane + static_cast<std::size_t>(y) * lw, 1, lw, coupling, scratch);
        for (int x = 0; x < lw; ++x) solve_axis(plane + x, lw, lh, coupling, scratch);
    }
    return Latent(latent_shape, std::move(out));
}

std::vector<double> codec_axis_operator(int n, int upscale, double smoothing) {
    const double c = smoothing / upscale;
    std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        a[static_cast<std::size_t>(i) * n + i] = (n == 1) ? 1.0 : ((i == 0 || i == n - 1) ? 1.0 - c : 1.0 - 2.0 * c);
        if (i > 0) a[static_cast<std::size_t>(i) * n + i - 1] = c;
        if (i + 1 < n) a[static_cast<std::size_t>(i) * n + i + 1] = c;
    }
    return a;
}

namespace {

bool same_meta(const MetaParams& a, const MetaParams& b) {
    return a.timesteps == b.timesteps && a.latent_shape == b.latent_shape && a.scheduler == b.scheduler &&
           a.model_tag == b.model_tag && a.extra == b.extra;
}

}  // namespace

Latent starting_point(const MetaParams& m, const Seed32& seed) {
    return Latent(m.latent_shape, sample_gaussian(seed, m.latent_dim()));
}

std::shared_ptr<const SurrogateModel> SurrogateBackend::model(const MetaParams& m, const Digest32& e_digest) {
    if (m.scheduler != "ddim") throw BackendError("the surrogate only implements the ddim scheduler");
    {
        std::lock_guard lock(mutex_);
        if (last_ && last_digest_ == e_digest && same_meta(last_meta_, m)) return last_;
    }
    std::string key = canonical_meta_json(m) + to_hex(e_digest);
    {
        std::lock_guard lock(mutex_);
        if (auto it = models_.find(key); it != models_.end()) return remember(m, e_digest, it->second);
    }
    auto built = std::make_shared<const SurrogateModel>(m, Embedding::from_digest(e_digest));
    std::lock_guard lock(mutex_);
    auto [it, inserted] = models_.emplace(key, built);
    if (inserted) {
        insertion_order_.push_back(key);
        if (insertion_order_.size() > kMaxModels) {
            models_.erase(insertion_order_.front());
            insertion_order_.erase(insertion_order_.begin());
        }
    }
    return remember(m, e_digest, it->second);
}

std::shared_ptr<const SurrogateModel> SurrogateBackend::remember(const MetaParams& m, const Digest32& e_digest,
                                                                 std::shared_ptr<const SurrogateModel> model) {
    last_meta_ = m;
    last_digest_ = e_digest;
    last_ = model;
    return model;
}

Latent SurrogateBackend::generate(const MetaParams& m, const Digest32& e_digest, const Seed32& seed) {
    return model(m, e_digest)->generate(starting_point(m, seed));
}

Latent SurrogateBackend::generate_from(const MetaParams& m, const Digest32& e_digest, const Latent& start) {
    return model(m, e_digest)->generate(start);
}

Latent SurrogateBackend::encode(const Image& image) {
    const int u = codec_.upscale;
    if (image.shape[1] % u != 0 || image.shape[2] % u != 0) {
        throw ShapeMismatch("image size is not a multiple of the codec upscale factor");
    }
    return toy_encode(image, {image.shape[0], image.shape[1] / u, image.shape[2] / u}, codec_.smoothing);
}

Image SurrogateBackend::decode(const Latent& latent) { return toy_decode(latent, codec_.upscale, codec_.smoothing); }

Latent SurrogateBackend::encode_png(std::span<const std::uint8_t>) {
    throw BackendError("the surrogate backend has no PNG codec; supply a POAL image");
}

std::string SurrogateBackend::selector() const {
    return "surrogate(upscale=" + std::to_string(codec_.upscale) + ")";
}

}  // namespace poa
