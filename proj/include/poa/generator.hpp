// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "poa/prf_seed.hpp"
#include "poa/tensor.hpp"

namespace poa {

/// Cumulative products of a linear beta schedule; strictly decreasing in t.
struct Schedule {
    std::vector<double> alphas_bar;

    int timesteps() const { return static_cast<int>(alphas_bar.size()); }
    double final_alpha() const { return alphas_bar.back(); }
};

inline constexpr double kBetaStart = 1e-4;
inline constexpr double kBetaEnd = 2e-2;

Schedule make_schedule(int timesteps);

/// One deterministic DDIM update from x_t to x_{t-1}. Requires
/// 0 < alpha_t <= alpha_prev < 1.
Latent ddim_step(const Latent& x_t, const Latent& eps, double alpha_t, double alpha_prev);

/// Lower bound on E||L - L'|| / ||s - s'|| for DDIM with final alpha `alpha`.
double distance_ratio_bound(double alpha);

/// Conditioning derived from an embedding digest; `expanded` has 64 entries.
struct Embedding {
    Digest32 digest{};
    std::vector<double> expanded;

    static Embedding from_digest(const Digest32& digest);
};

inline constexpr std::size_t kEmbeddingWidth = 64;

/// Desk-scale stand-in for a latent diffusion model: a DDIM loop whose noise
/// predictor at step t is diag_t * H_{t,2} H_{t,1} H_{t,0} x + 0.1 * b_t, with
/// Householder reflections H, a diagonal in [0.9, 1.1], and a bias b_t, all
/// drawn from the keystream keyed by SHA3-256(m_json || e.digest).
///
/// Keystream layout (sub-streams of that key): reflection j of step t uses
/// stream 3t + j; the diagonal uses 3T + 2t; the bias noise uses 3T + 2t + 1.
class SurrogateModel {
public:
    SurrogateModel(const MetaParams& m, const Embedding& e);

    Latent generate(const Latent& start) const;

    /// Noise prediction at schedule index t (0 = least noisy).
    void predict_noise(int t, std::span<const double> x, std::span<double> out) const;

    const Schedule& schedule() const { return schedule_; }
    Shape3 latent_shape() const { return shape_; }
    /// Per-step Lipschitz bound of the noise predictor (max diagonal entry).
    double predictor_lipschitz(int t) const;
    /// Euclidean norm of the additive term 0.1 * b_t.
    double bias_norm(int t) const;

private:
    Shape3 shape_;
    std::size_t dim_;
    Schedule schedule_;
    // Row-major [t][j][i] for reflections, [t][i] for diagonal and bias.
    std::vector<double> reflections_;
    std::vector<double> diagonal_;
    std::vector<double> bias_;
};

Latent surrogate_generate(const MetaParams& m, const Embedding& e, const Latent& s);

inline constexpr double kDefaultSmoothing = 0.125;

/// Toy VAE decoder: nearest-neighbour upscale by `upscale`, then the separable
/// 3x3 kernel [w, 1-2w, w] (x) [w, 1-2w, w] with edge clamping. w = 0 is the
/// identity kernel.
Image toy_decode(const Latent& latent, int upscale, double smoothing = kDefaultSmoothing);

/// Exact left inverse of toy_decode: u x u block means followed by the inverse
/// of the induced tridiagonal latent-grid operator along each axis.
Latent toy_encode(const Image& image, Shape3 latent_shape, double smoothing = kDefaultSmoothing);

/// Tridiagonal latent-grid operator block_mean . smooth . upsample along one
/// axis of length n. Returned densely (row-major n x n) for inspection.
std::vector<double> codec_axis_operator(int n, int upscale, double smoothing);

struct CodecConfig {
    int upscale = 4;
    double smoothing = kDefaultSmoothing;
};

/// Generator backend L_m(e, s) plus the codec used for pixel-domain work.
class Backend {
public:
    virtual ~Backend() = default;

    /// Generates from the starting point that `seed` expands to.
    virtual Latent generate(const MetaParams& m, const Digest32& e_digest, const Seed32& seed) = 0;
    virtual Latent encode(const Image& image) = 0;
    virtual Image decode(const Latent& latent) = 0;
    virtual Latent encode_png(std::span<const std::uint8_t> png) = 0;
    /// Stable selector string echoed into reports ("surrogate" or the endpoint URI).
    virtual std::string selector() const = 0;
};

class SurrogateBackend : public Backend {
public:
    explicit SurrogateBackend(CodecConfig codec = {}) : codec_(codec) {}

    Latent generate(const MetaParams& m, const Digest32& e_digest, const Seed32& seed) override;
    Latent generate_from(const MetaParams& m, const Digest32& e_digest, const Latent& start);
    Latent encode(const Image& image) override;
    Image decode(const Latent& latent) override;
    Latent encode_png(std::span<const std::uint8_t> png) override;
    std::string selector() const override;

    const CodecConfig& codec() const { return codec_; }
    std::shared_ptr<const SurrogateModel> model(const MetaParams& m, const Digest32& e_digest);

private:
    // Called with mutex_ held.
    std::shared_ptr<const SurrogateModel> remember(const MetaParams& m, const Digest32& e_digest,
                                                   std::shared_ptr<const SurrogateModel> model);

    CodecConfig codec_;
    std::mutex mutex_;
    MetaParams last_meta_;
    Digest32 last_digest_{};
    std::shared_ptr<const SurrogateModel> last_;
    // Bounded: older entries are dropped once the cache holds kMaxModels models.
    std::map<std::string, std::shared_ptr<const SurrogateModel>> models_;
    std::vector<std::string> insertion_order_;
    static constexpr std::size_t kMaxModels = 8;
};

/// Starting point drawn from a seed: sample_gaussian(seed, d) shaped as m's latent.
Latent starting_point(const MetaParams& m, const Seed32& seed);

}  // namespace poa
