// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

// Seed binding: an author's identity keys HMAC-SHA3-256 over the canonical
// encoding of the generation parameters, and the resulting 32-byte seed is
// expanded into a standard-normal starting point by a counter-mode SHA3
// keystream followed by Box-Muller.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "poa/hash.hpp"

namespace poa {

struct Seed32 {
    Digest32 bytes{};

    friend bool operator==(const Seed32&, const Seed32&) = default;
};

using FreeBits = std::array<std::uint8_t, 16>;

struct Identity {
    Digest32 id_bytes{};
    std::string label;
    std::string registered_at;  // ISO-8601 UTC

    std::string id_hex() const { return to_hex(id_bytes); }
};

/// Generation meta-parameters. Unknown keys from an m-file are kept in
/// `extra` so that everything the author supplied is bound by the seed.
struct MetaParams {
    std::string scheduler = "ddim";
    int timesteps = 50;
    std::array<int, 3> latent_shape{4, 16, 16};
    std::string model_tag = "toy-ddim-v1";
    nlohmann::json extra = nlohmann::json::object();

    std::size_t latent_dim() const {
        return static_cast<std::size_t>(latent_shape[0]) * latent_shape[1] * latent_shape[2];
    }
};

nlohmann::json meta_to_json(const MetaParams& m);
MetaParams meta_from_json(const nlohmann::json& j);
/// Sorted keys, no insignificant whitespace, UTF-8.
std::string canonical_meta_json(const MetaParams& m);

struct Kappa {
    MetaParams m;
    Digest32 e_digest{};
    std::optional<std::string> e_ref;
    FreeBits r{};
};

/// "POAv1" || LE32(len(m_json)) || m_json || e_digest || r
Bytes canonical_kappa_bytes(const Kappa& kappa);

/// HMAC-SHA3-256 keyed by the identity over canonical_kappa_bytes(kappa).
Seed32 derive_seed(const Identity& identity, const Kappa& kappa);

inline constexpr const char* kPrfName = "HMAC-SHA3-256";

/// SHA3-256(seed || LE64(counter)).
Digest32 expand_block(const Seed32& seed, std::uint64_t counter);

/// Standard-normal draws from sub-stream `stream` of the seed's keystream.
/// Sub-stream k uses counters (k << 32) + block; stream 0 is the primary
/// starting-point stream. Output is a prefix-stable function of (seed, stream).
std::vector<double> sample_gaussian(const Seed32& seed, std::size_t count, std::uint32_t stream = 0);

/// Uniform (0,1) draws, one per 64-bit keystream word, from sub-stream `stream`.
std::vector<double> sample_uniform(const Seed32& seed, std::size_t count, std::uint32_t stream);

/// Per-index child seed: expand_block(parent, 2^63 + index). The top counter
/// bit is reserved for child seeds, so it never collides with a sample stream.
Seed32 derive_subseed(const Seed32& parent, std::uint32_t index);

/// Embedding serialization convention: LE32 ndim, LE32 dims, f32 LE row-major.
Bytes serialize_embedding(std::span<const std::uint32_t> shape, std::span<const float> values);
Digest32 embedding_digest(std::span<const std::uint8_t> serialized);

std::string utc_timestamp_now();

/// Append-only JSONL registry of identities with an advisory lock held
/// across the duplicate check and the append.
class IdentityRegistry {
public:
    explicit IdentityRegistry(std::filesystem::path path);

    /// Throws DuplicateIdentity when the entropy is already registered.
    Identity register_identity(const std::string& label, const Digest32& entropy);
    Identity register_identity(const std::string& label, const Digest32& entropy,
                               const std::string& timestamp);

    std::vector<Identity> load() const;
    /// Looks up by 64-char hex id, or by label when the key is not hex.
    std::optional<Identity> find(const std::string& id_hex_or_label) const;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

Identity register_identity(IdentityRegistry& registry, const std::string& label, const Digest32& entropy);

struct KappaRecord {
    std::string identity_id_hex;
    Kappa kappa;
    std::string created_at;
};

nlohmann::json kappa_to_json(const Kappa& kappa);
Kappa kappa_from_json(const nlohmann::json& j);

class KappaArchive {
public:
    explicit KappaArchive(std::filesystem::path path);

    void append(const KappaRecord& record);
    std::vector<KappaRecord> load() const;
    /// Looks up a record by hex free bits.
    std::optional<KappaRecord> find_by_r(const std::string& r_hex) const;

private:
    std::filesystem::path path_;
};

}  // namespace poa
