// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#include "poa/prf_seed.hpp"

#include <sys/file.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <numbers>
#include <set>

#include "poa/errors.hpp"

namespace poa {

namespace {

constexpr std::uint64_t kSubseedDomain = std::uint64_t{1} << 63;

// Holds an exclusive flock on a file for the lifetime of the object.
class LockedFile {
public:
    explicit LockedFile(const std::filesystem::path& path) {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        file_ = std::fopen(path.c_str(), "a+");
        if (file_ == nullptr) throw Error("cannot open " + path.string());
        ::flock(::fileno(file_), LOCK_EX);
    }
    ~LockedFile() {
        ::flock(::fileno(file_), LOCK_UN);
        std::fclose(file_);
    }
    LockedFile(const LockedFile&) = delete;
    LockedFile& operator=(const LockedFile&) = delete;

    void append_line(const std::string& line) {
        std::fputs(line.c_str(), file_);
        std::fputc('\n', file_);
        std::fflush(file_);
    }

private:
    std::FILE* file_ = nullptr;
};

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
    std::vector<nlohmann::json> out;
    std::ifstream in(path);
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(nlohmann::json::parse(line));
    }
    return out;
}

double unit_open(std::uint64_t w) {
    return (static_cast<double>(w >> 11) + 0.5) / 9007199254740992.0;  // 2^53
}

std::uint64_t stream_counter(std::uint32_t stream, std::uint64_t block) {
    return (static_cast<std::uint64_t>(stream) << 32) + block;
}

// Same blocks as expand_block, with the seed absorbed once per stream.
class Keystream {
public:
    Keystream(const Seed32& seed, std::uint32_t stream) : hasher_(seed.bytes), stream_(stream) {}
    Digest32 block(std::uint64_t index) {
        std::array<std::uint8_t, 8> counter{};
        const std::uint64_t c = stream_counter(stream_, index);
        for (int i = 0; i < 8; ++i) counter[i] = static_cast<std::uint8_t>(c >> (8 * i));
        return hasher_.digest(counter);
    }

private:
    Sha3PrefixHasher hasher_;
    std::uint32_t stream_;
};

}  // namespace

nlohmann::json meta_to_json(const MetaParams& m) {
    nlohmann::json j = m.extra.is_object() ? m.extra : nlohmann::json::object();
    j["scheduler"] = m.scheduler;
    j["timesteps"] = m.timesteps;
    j["latent_shape"] = m.latent_shape;
    j["model_tag"] = m.model_tag;
    return j;
}

MetaParams meta_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw FormatError("meta-parameters must be a JSON object");
    MetaParams m;
    nlohmann::json extra = j;
    try {
        m.scheduler = j.at("scheduler").get<std::string>();
        m.timesteps = j.at("timesteps").get<int>();
        m.latent_shape = j.at("latent_shape").get<std::array<int, 3>>();
        m.model_tag = j.at("model_tag").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("meta-parameters: ") + e.what());
    }
    if (m.timesteps < 1) throw FormatError("timesteps must be positive");
    for (int dim : m.latent_shape) {
        if (dim < 1) throw FormatError("latent_shape entries must be positive");
    }
    for (const char* key : {"scheduler", "timesteps", "latent_shape", "model_tag"}) extra.erase(key);
    m.extra = std::move(extra);
    return m;
}

std::string canonical_meta_json(const MetaParams& m) {
    // nlohmann::json objects are std::map-backed, so keys come out sorted.
    return meta_to_json(m).dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
}

Bytes canonical_kappa_bytes(const Kappa& kappa) {
    const std::string m_json = canonical_meta_json(kappa.m);
    Bytes out{'P', 'O', 'A', 'v', '1'};
    append_le32(out, static_cast<std::uint32_t>(m_json.size()));
    out.insert(out.end(), m_json.begin(), m_json.end());
    out.insert(out.end(), kappa.e_digest.begin(), kappa.e_digest.end());
    out.insert(out.end(), kappa.r.begin(), kappa.r.end());
    return out;
}

Seed32 derive_seed(const Identity& identity, const Kappa& kappa) {
    return Seed32{hmac_sha3_256(identity.id_bytes, canonical_kappa_bytes(kappa))};
}

Digest32 expand_block(const Seed32& seed, std::uint64_t counter) {
    std::array<std::uint8_t, 40> buf{};
    std::copy(seed.bytes.begin(), seed.bytes.end(), buf.begin());
    for (int i = 0; i < 8; ++i) buf[32 + i] = static_cast<std::uint8_t>(counter >> (8 * i));
    return sha3_256(buf);
}

std::vector<double> sample_gaussian(const Seed32& seed, std::size_t count, std::uint32_t stream) {
    std::vector<double> out;
    out.reserve(count + 3);
    constexpr double two_pi = 2.0 * std::numbers::pi;
    Keystream keystream(seed, stream);
    for (std::uint64_t block = 0; out.size() < count; ++block) {
        const Digest32 b = keystream.block(block);
        for (int pair = 0; pair < 2; ++pair) {
            const double u1 = unit_open(load_le64(b.data() + 16 * pair));
            const double u2 = unit_open(load_le64(b.data() + 16 * pair + 8));
            const double radius = std::sqrt(-2.0 * std::log(u1));
            out.push_back(radius * std::cos(two_pi * u2));
            out.push_back(radius * std::sin(two_pi * u2));
        }
    }
    out.resize(count);
    return out;
}

std::vector<double> sample_uniform(const Seed32& seed, std::size_t count, std::uint32_t stream) {
    std::vector<double> out;
    out.reserve(count + 3);
    Keystream keystream(seed, stream);
    for (std::uint64_t block = 0; out.size() < count; ++block) {
        const Digest32 b = keystream.block(block);
        for (int w = 0; w < 4; ++w) out.push_back(unit_open(load_le64(b.data() + 8 * w)));
    }
    out.resize(count);
    return out;
}

Seed32 derive_subseed(const Seed32& parent, std::uint32_t index) {
    return Seed32{expand_block(parent, kSubseedDomain | index)};
}

Bytes serialize_embedding(std::span<const std::uint32_t> shape, std::span<const float> values) {
    std::size_t expected = 1;
    for (auto dim : shape) expected *= dim;
    if (expected != values.size()) throw ShapeMismatch("embedding shape does not match value count");
    Bytes out;
    out.reserve(4 + 4 * shape.size() + 4 * values.size());
    append_le32(out, static_cast<std::uint32_t>(shape.size()));
    for (auto dim : shape) append_le32(out, dim);
    for (float v : values) {
        std::uint32_t bits = 0;
        std::memcpy(&bits, &v, sizeof bits);
        append_le32(out, bits);
    }
    return out;
}

Digest32 embedding_digest(std::span<const std::uint8_t> serialized) { return sha3_256(serialized); }

std::string utc_timestamp_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

IdentityRegistry::IdentityRegistry(std::filesystem::path path) : path_(std::move(path)) {}

Identity IdentityRegistry::register_identity(const std::string& label, const Digest32& entropy) {
    return register_identity(label, entropy, utc_timestamp_now());
}

Identity IdentityRegistry::register_identity(const std::string& label, const Digest32& entropy,
                                             const std::string& timestamp) {
    LockedFile lock(path_);
    const std::string id_hex = to_hex(entropy);
    for (const auto& existing : load()) {
        if (existing.id_bytes == entropy) throw DuplicateIdentity("identity " + id_hex + " is already registered");
    }
    Identity identity{entropy, label, timestamp};
    nlohmann::json record = {{"id_hex", id_hex}, {"label", label}, {"registered_at", timestamp}};
    lock.append_line(record.dump());
    return identity;
}

std::vector<Identity> IdentityRegistry::load() const {
    std::vector<Identity> out;
    for (const auto& j : read_jsonl(path_)) {
        out.push_back(Identity{fixed_from_hex<32>(j.at("id_hex").get<std::string>()),
                               j.at("label").get<std::string>(), j.at("registered_at").get<std::string>()});
    }
    return out;
}

std::optional<Identity> IdentityRegistry::find(const std::string& key) const {
    for (const auto& identity : load()) {
        if (identity.id_hex() == key || identity.label == key) return identity;
    }
    return std::nullopt;
}

Identity register_identity(IdentityRegistry& registry, const std::string& label, const Digest32& entropy) {
    return registry.register_identity(label, entropy);
}

nlohmann::json kappa_to_json(const Kappa& kappa) {
    nlohmann::json j = {
        {"m", meta_to_json(kappa.m)},
        {"e_digest_hex", to_hex(kappa.e_digest)},
        {"r_hex", to_hex(kappa.r)},
    };
    j["e_ref"] = kappa.e_ref ? nlohmann::json(*kappa.e_ref) : nlohmann::json(nullptr);
    return j;
}

Kappa kappa_from_json(const nlohmann::json& j) {
    Kappa kappa;
    try {
        kappa.m = meta_from_json(j.at("m"));
        kappa.e_digest = fixed_from_hex<32>(j.at("e_digest_hex").get<std::string>());
        kappa.r = fixed_from_hex<16>(j.at("r_hex").get<std::string>());
        if (j.contains("e_ref") && !j.at("e_ref").is_null()) kappa.e_ref = j.at("e_ref").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("kappa: ") + e.what());
    }
    return kappa;
}

KappaArchive::KappaArchive(std::filesystem::path path) : path_(std::move(path)) {}

void KappaArchive::append(const KappaRecord& record) {
    nlohmann::json j = kappa_to_json(record.kappa);
    j["identity_id_hex"] = record.identity_id_hex;
    j["created_at"] = record.created_at;
    LockedFile lock(path_);
    lock.append_line(j.dump());
}

std::vector<KappaRecord> KappaArchive::load() const {
    std::vector<KappaRecord> out;
    for (const auto& j : read_jsonl(path_)) {
        out.push_back(KappaRecord{j.at("identity_id_hex").get<std::string>(), kappa_from_json(j),
                                  j.at("created_at").get<std::string>()});
    }
    return out;
}

std::optional<KappaRecord> KappaArchive::find_by_r(const std::string& r_hex) const {
    for (auto& record : load()) {
        if (to_hex(record.kappa.r) == r_hex) return record;
    }
    return std::nullopt;
}

}  // namespace poa
