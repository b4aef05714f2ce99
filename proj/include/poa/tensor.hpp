// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "poa/hash.hpp"

namespace poa {

using Shape3 = std::array<int, 3>;  // channels, height, width

inline std::size_t shape_size(const Shape3& s) {
    return static_cast<std::size_t>(s[0]) * static_cast<std::size_t>(s[1]) * static_cast<std::size_t>(s[2]);
}

/// Flattened row-major latent of shape [channels, height, width].
struct Latent {
    Shape3 shape{0, 0, 0};
    std::vector<double> data;

    Latent() = default;
    Latent(Shape3 s, std::vector<double> values);
    static Latent zeros(Shape3 s) { return Latent(s, std::vector<double>(shape_size(s), 0.0)); }

    std::size_t size() const { return data.size(); }
    friend bool operator==(const Latent&, const Latent&) = default;
};

/// Pixel-domain image; real-valued, same layout as Latent.
struct Image {
    Shape3 shape{0, 0, 0};
    std::vector<double> data;

    Image() = default;
    Image(Shape3 s, std::vector<double> values);

    std::size_t size() const { return data.size(); }
    double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x]; }
    double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x]; }
    friend bool operator==(const Image&, const Image&) = default;
};

/// POAL container: "POAL", version 0x01, dtype 0x01 (f32 LE), u8 ndim, LE32 dims, raw data.
Bytes encode_poal(std::span<const std::uint32_t> dims, std::span<const double> values);

struct PoalPayload {
    std::vector<std::uint32_t> dims;
    std::vector<double> values;
};
/// Throws FormatError on a bad magic, version, dtype, or length.
PoalPayload decode_poal(std::span<const std::uint8_t> bytes);

Bytes latent_to_poal(const Latent& latent);
Latent latent_from_poal(std::span<const std::uint8_t> bytes);
Bytes image_to_poal(const Image& image);
Image image_from_poal(std::span<const std::uint8_t> bytes);

/// SHA3-256 of the POAL encoding; what reports and the CLI print.
Digest32 latent_digest(const Latent& latent);
Digest32 image_digest(const Image& image);

Bytes read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace poa
