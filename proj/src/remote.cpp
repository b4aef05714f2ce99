// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#include "poa/remote.hpp"

#include <httplib.h>

#include "poa/errors.hpp"

namespace poa {

namespace {

httplib::Client make_client(const std::string& endpoint, int timeout_seconds) {
    httplib::Client client(endpoint);
    client.set_connection_timeout(timeout_seconds, 0);
    client.set_read_timeout(timeout_seconds, 0);
    client.set_write_timeout(timeout_seconds, 0);
    return client;
}

std::string error_message(const httplib::Result& res) {
    try {
        auto body = nlohmann::json::parse(res->body);
        if (body.contains("error")) return body["error"].get<std::string>();
    } catch (const nlohmann::json::exception&) {
    }
    return res->body.empty() ? "HTTP " + std::to_string(res->status) : res->body;
}

nlohmann::json parse_body(const std::string& body) {
    try {
        return nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolVersionMismatch(std::string("response is not JSON: ") + e.what());
    }
}

}  // namespace

RemoteBackend::RemoteBackend(std::string endpoint, int timeout_seconds)
    : endpoint_(std::move(endpoint)), timeout_seconds_(timeout_seconds) {}

nlohmann::json RemoteBackend::post(const std::string& path, const nlohmann::json& body) {
    auto client = make_client(endpoint_, timeout_seconds_);
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res) throw TransportError(endpoint_ + path + ": " + httplib::to_string(res.error()));
    if (res->status != 200) throw BackendError(endpoint_ + path + ": " + error_message(res));
    return parse_body(res->body);
}

BackendInfo RemoteBackend::info() {
    auto client = make_client(endpoint_, timeout_seconds_);
    auto res = client.Get("/info");
    if (!res) throw TransportError(endpoint_ + "/info: " + httplib::to_string(res.error()));
    if (res->status != 200) throw BackendError(endpoint_ + "/info: " + error_message(res));
    const auto body = parse_body(res->body);
    BackendInfo info;
    try {
        info.latent_shape = body.at("latent_shape").get<Shape3>();
        info.model_tag = body.at("model_tag").get<std::string>();
        info.proto = body.at("proto").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolVersionMismatch(std::string("/info: ") + e.what());
    }
    if (info.proto != kWireProtocol) throw ProtocolVersionMismatch("backend speaks " + info.proto);
    return info;
}

Latent RemoteBackend::latent_from_response(const nlohmann::json& response, const Shape3* expected) {
    if (!response.contains("latent_b64") || !response["latent_b64"].is_string()) {
        throw ProtocolVersionMismatch("response lacks latent_b64");
    }
    try {
        Latent latent = latent_from_poal(base64_decode(response["latent_b64"].get<std::string>()));
        if (expected != nullptr && latent.shape != *expected) {
            throw ProtocolVersionMismatch("latent shape header does not match the requested latent shape");
        }
        return latent;
    } catch (const FormatError& e) {
        throw ProtocolVersionMismatch(e.what());
    } catch (const ShapeMismatch& e) {
        throw ProtocolVersionMismatch(e.what());
    }
}

Latent RemoteBackend::generate(const MetaParams& m, const Digest32& e_digest, const Seed32& seed) {
    nlohmann::json request = {
        {"proto", kWireProtocol},
        {"m", meta_to_json(m)},
        {"e_digest", to_hex(e_digest)},
        {"seed", to_hex(seed.bytes)},
    };
    return latent_from_response(post("/generate", request), &m.latent_shape);
}

Latent RemoteBackend::encode(const Image&) {
    throw BackendError("the remote backend encodes PNG images only");
}

Image RemoteBackend::decode(const Latent&) {
    throw BackendError("the poa/1 protocol has no decode endpoint");
}

Latent RemoteBackend::encode_png(std::span<const std::uint8_t> png) {
    return latent_from_response(post("/encode", {{"image_png_b64", base64_encode(png)}}), nullptr);
}

Bytes RemoteBackend::distort_png(std::span<const std::uint8_t> png, const std::string& kind, double param) {
    if (kind != "jpeg" && kind != "gauss") throw DomainError("distortion kind must be jpeg or gauss");
    auto response = post("/distort", {{"image_png_b64", base64_encode(png)}, {"kind", kind}, {"param", param}});
    if (!response.contains("image_png_b64")) throw ProtocolVersionMismatch("response lacks image_png_b64");
    try {
        return base64_decode(response["image_png_b64"].get<std::string>());
    } catch (const FormatError& e) {
        throw ProtocolVersionMismatch(e.what());
    }
}

Latent remote_generate(const std::string& endpoint, const MetaParams& m, const Digest32& e_digest, const Seed32& seed) {
    return RemoteBackend(endpoint).generate(m, e_digest, seed);
}

Latent remote_encode(const std::string& endpoint, std::span<const std::uint8_t> image_bytes) {
    return RemoteBackend(endpoint).encode_png(image_bytes);
}

}  // namespace poa
