// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "poa/generator.hpp"

namespace poa {

inline constexpr const char* kWireProtocol = "poa/1";

struct BackendInfo {
    Shape3 latent_shape{0, 0, 0};
    std::string model_tag;
    std::string proto;
};

/// Client for a generator service speaking the poa/1 JSON-over-HTTP protocol:
///   GET  /info      -> {latent_shape, model_tag, proto}
///   POST /generate  {proto, m, e_digest, seed} -> {latent_b64}
///   POST /encode    {image_png_b64}            -> {latent_b64}
///   POST /distort   {image_png_b64, kind, param} -> {image_png_b64}
/// Latents travel as base64 POAL files. Errors: TransportError when the
/// service is unreachable, ProtocolVersionMismatch on a malformed or
/// mismatched payload, BackendError carrying the service's message otherwise.
class RemoteBackend : public Backend {
public:
    explicit RemoteBackend(std::string endpoint, int timeout_seconds = 120);

    BackendInfo info();
    Latent generate(const MetaParams& m, const Digest32& e_digest, const Seed32& seed) override;
    Latent encode(const Image& image) override;
    Image decode(const Latent& latent) override;
    Latent encode_png(std::span<const std::uint8_t> png) override;
    Bytes distort_png(std::span<const std::uint8_t> png, const std::string& kind, double param);
    std::string selector() const override { return endpoint_; }

private:
    nlohmann::json post(const std::string& path, const nlohmann::json& body);
    Latent latent_from_response(const nlohmann::json& response, const Shape3* expected);

    std::string endpoint_;
    int timeout_seconds_;
};

Latent remote_generate(const std::string& endpoint, const MetaParams& m, const Digest32& e_digest, const Seed32& seed);
Latent remote_encode(const std::string& endpoint, std::span<const std::uint8_t> image_bytes);

}  // namespace poa
