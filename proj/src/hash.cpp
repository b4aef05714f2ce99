// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#include "poa/hash.hpp"

#include <openssl/core_names.h>
#include <openssl/evp.h>
#include <openssl/params.h>

#include <memory>

#include "poa/errors.hpp"

namespace poa {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

// Fetched once; EVP_MD objects are immutable and safe to share between threads.
const EVP_MD* sha3_md() {
    static const EVP_MD* md = EVP_MD_fetch(nullptr, "SHA3-256", nullptr);
    if (md == nullptr) throw Error("OpenSSL does not provide SHA3-256");
    return md;
}

struct MacDeleter {
    void operator()(EVP_MAC* p) const { EVP_MAC_free(p); }
};
struct MacCtxDeleter {
    void operator()(EVP_MAC_CTX* p) const { EVP_MAC_CTX_free(p); }
};

EVP_MAC* hmac_algorithm() {
    static std::unique_ptr<EVP_MAC, MacDeleter> mac(EVP_MAC_fetch(nullptr, "HMAC", nullptr));
    if (!mac) throw Error("OpenSSL does not provide HMAC");
    return mac.get();
}

}  // namespace

std::string to_hex(std::span<const std::uint8_t> bytes) {
    std::string out;
    out.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) throw FormatError("odd-length hex string");
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = hex_value(hex[2 * i]);
        int lo = hex_value(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw FormatError("invalid hex digit");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

void throw_bad_length(std::size_t expected, std::size_t got) {
    throw FormatError("expected " + std::to_string(expected) + " bytes, got " + std::to_string(got));
}

Digest32 sha3_256(std::span<const std::uint8_t> data) {
    Digest32 out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, sha3_md(), nullptr) != 1 || len != 32) {
        throw Error("SHA3-256 evaluation failed");
    }
    return out;
}

Sha3PrefixHasher::Sha3PrefixHasher(std::span<const std::uint8_t> prefix)
    : base_(EVP_MD_CTX_new()), work_(EVP_MD_CTX_new()) {
    if (base_ == nullptr || work_ == nullptr || EVP_DigestInit_ex2(base_, sha3_md(), nullptr) != 1 ||
        EVP_DigestUpdate(base_, prefix.data(), prefix.size()) != 1) {
        EVP_MD_CTX_free(base_);
        EVP_MD_CTX_free(work_);
        throw Error("SHA3-256 context setup failed");
    }
}

Sha3PrefixHasher::~Sha3PrefixHasher() {
    EVP_MD_CTX_free(base_);
    EVP_MD_CTX_free(work_);
}

Digest32 Sha3PrefixHasher::digest(std::span<const std::uint8_t> suffix) {
    Digest32 out{};
    unsigned int len = 0;
    if (EVP_MD_CTX_copy_ex(work_, base_) != 1 || EVP_DigestUpdate(work_, suffix.data(), suffix.size()) != 1 ||
        EVP_DigestFinal_ex(work_, out.data(), &len) != 1 || len != 32) {
        throw Error("SHA3-256 evaluation failed");
    }
    return out;
}

Digest32 hmac_sha3_256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> message) {
    std::unique_ptr<EVP_MAC_CTX, MacCtxDeleter> ctx(EVP_MAC_CTX_new(hmac_algorithm()));
    if (!ctx) throw Error("HMAC context allocation failed");
    char digest_name[] = "SHA3-256";
    OSSL_PARAM params[] = {
        OSSL_PARAM_construct_utf8_string(OSSL_MAC_PARAM_DIGEST, digest_name, 0),
        OSSL_PARAM_construct_end(),
    };
    Digest32 out{};
    std::size_t len = 0;
    if (EVP_MAC_init(ctx.get(), key.data(), key.size(), params) != 1 ||
        EVP_MAC_update(ctx.get(), message.data(), message.size()) != 1 ||
        EVP_MAC_final(ctx.get(), out.data(), &len, out.size()) != 1 || len != 32) {
        throw Error("HMAC-SHA3-256 evaluation failed");
    }
    return out;
}

std::string base64_encode(std::span<const std::uint8_t> data) {
    std::string out(4 * ((data.size() + 2) / 3), '\0');
    int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(),
                            static_cast<int>(data.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

Bytes base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw FormatError("base64 length is not a multiple of 4");
    Bytes out(3 * text.size() / 4);
    int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                            static_cast<int>(text.size()));
    if (n < 0) throw FormatError("invalid base64 payload");
    // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
    std::size_t pad = 0;
    if (!text.empty() && text.back() == '=') ++pad;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

void append_le32(Bytes& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void append_le64(Bytes& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t load_le64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::uint32_t load_le32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace poa
