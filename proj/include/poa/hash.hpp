// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

struct evp_md_ctx_st;

namespace poa {

using Bytes = std::vector<std::uint8_t>;
using Digest32 = std::array<std::uint8_t, 32>;

std::string to_hex(std::span<const std::uint8_t> bytes);
Bytes from_hex(std::string_view hex);

[[noreturn]] void throw_bad_length(std::size_t expected, std::size_t got);

/// Parses exactly N bytes of hex; throws FormatError on any other length.
template <std::size_t N>
std::array<std::uint8_t, N> fixed_from_hex(std::string_view hex) {
    Bytes raw = from_hex(hex);
    std::array<std::uint8_t, N> out{};
    if (raw.size() != N) {
        throw_bad_length(N, raw.size());
    }
    for (std::size_t i = 0; i < N; ++i) out[i] = raw[i];
    return out;
}

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

Digest32 sha3_256(std::span<const std::uint8_t> data);
/// SHA3-256 of prefix || suffix for many suffixes; the prefix is absorbed once.
class Sha3PrefixHasher {
public:
    explicit Sha3PrefixHasher(std::span<const std::uint8_t> prefix);
    ~Sha3PrefixHasher();
    Sha3PrefixHasher(const Sha3PrefixHasher&) = delete;
    Sha3PrefixHasher& operator=(const Sha3PrefixHasher&) = delete;

    Digest32 digest(std::span<const std::uint8_t> suffix);

private:
    evp_md_ctx_st* base_;
    evp_md_ctx_st* work_;
};

Digest32 hmac_sha3_256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> message);

std::string base64_encode(std::span<const std::uint8_t> data);
Bytes base64_decode(std::string_view text);

void append_le32(Bytes& out, std::uint32_t v);
void append_le64(Bytes& out, std::uint64_t v);
std::uint64_t load_le64(const std::uint8_t* p);
std::uint32_t load_le32(const std::uint8_t* p);

}  // namespace poa
