// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#include "poa/tensor.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "poa/errors.hpp"

namespace poa {

namespace {

constexpr std::uint8_t kPoalVersion = 0x01;
constexpr std::uint8_t kDtypeF32 = 0x01;

void check_values(const Shape3& s, const std::vector<double>& values, const char* what) {
    for (int dim : s) {
        if (dim < 1) throw ShapeMismatch(std::string(what) + " dimensions must be positive");
    }
    if (shape_size(s) != values.size()) throw ShapeMismatch(std::string(what) + " data length does not match shape");
}

Shape3 shape_from_dims(const std::vector<std::uint32_t>& dims) {
    if (dims.size() != 3) throw FormatError("expected a 3-dimensional POAL payload");
    return {static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2])};
}

std::vector<std::uint32_t> dims_of(const Shape3& s) {
    return {static_cast<std::uint32_t>(s[0]), static_cast<std::uint32_t>(s[1]), static_cast<std::uint32_t>(s[2])};
}

}  // namespace

Latent::Latent(Shape3 s, std::vector<double> values) : shape(s), data(std::move(values)) {
    check_values(shape, data, "latent");
    for (double v : data) {
        if (!std::isfinite(v)) throw FormatError("latent entries must be finite");
    }
}

Image::Image(Shape3 s, std::vector<double> values) : shape(s), data(std::move(values)) {
    check_values(shape, data, "image");
}

Bytes encode_poal(std::span<const std::uint32_t> dims, std::span<const double> values) {
    if (dims.size() > 255) throw FormatError("too many dimensions");
    Bytes out{'P', 'O', 'A', 'L', kPoalVersion, kDtypeF32, static_cast<std::uint8_t>(dims.size())};
    for (auto d : dims) append_le32(out, d);
    out.reserve(out.size() + 4 * values.size());
    for (double v : values) {
        const float f = static_cast<float>(v);
        std::uint32_t bits = 0;
        std::memcpy(&bits, &f, sizeof bits);
        append_le32(out, bits);
    }
    return out;
}

PoalPayload decode_poal(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 7 || std::memcmp(bytes.data(), "POAL", 4) != 0) throw FormatError("missing POAL magic");
    if (bytes[4] != kPoalVersion) throw FormatError("unsupported POAL version " + std::to_string(bytes[4]));
    if (bytes[5] != kDtypeF32) throw FormatError("unsupported POAL dtype tag " + std::to_string(bytes[5]));
    const std::size_t ndim = bytes[6];
    if (bytes.size() < 7 + 4 * ndim) throw FormatError("truncated POAL shape header");
    PoalPayload payload;
    std::size_t count = 1;
    for (std::size_t i = 0; i < ndim; ++i) {
        payload.dims.push_back(load_le32(bytes.data() + 7 + 4 * i));
        count *= payload.dims.back();
    }
    const std::size_t offset = 7 + 4 * ndim;
    if (bytes.size() != offset + 4 * count) throw FormatError("POAL payload length does not match its shape header");
    payload.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t bits = load_le32(bytes.data() + offset + 4 * i);
        float f = 0.0f;
        std::memcpy(&f, &bits, sizeof f);
        payload.values[i] = f;
    }
    return payload;
}

Bytes latent_to_poal(const Latent& latent) { return encode_poal(dims_of(latent.shape), latent.data); }

Latent latent_from_poal(std::span<const std::uint8_t> bytes) {
    PoalPayload p = decode_poal(bytes);
    return Latent(shape_from_dims(p.dims), std::move(p.values));
}

Bytes image_to_poal(const Image& image) { return encode_poal(dims_of(image.shape), image.data); }

Image image_from_poal(std::span<const std::uint8_t> bytes) {
    PoalPayload p = decode_poal(bytes);
    return Image(shape_from_dims(p.dims), std::move(p.values));
}

Digest32 latent_digest(const Latent& latent) { return sha3_256(latent_to_poal(latent)); }
Digest32 image_digest(const Image& image) { return sha3_256(image_to_poal(image)); }

Bytes read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot read " + path);
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace poa
