// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "poa/hash.hpp"
#include "poa/prf_seed.hpp"
#include "poa/tensor.hpp"

namespace poa::test {

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("poa-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_text(const std::filesystem::path& path) {
    const Bytes raw = read_file(path.string());
    return std::string(raw.begin(), raw.end());
}

inline Seed32 seed_from(std::uint64_t value) {
    Bytes raw;
    append_le64(raw, value);
    return Seed32{sha3_256(raw)};
}

inline Digest32 digest_from(const std::string& label) { return sha3_256(as_bytes(label)); }

inline Identity identity_from(const std::string& label) {
    return Identity{digest_from("identity:" + label), label, "2026-01-01T00:00:00Z"};
}

inline Latent random_latent(Shape3 shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> values(shape_size(shape));
    for (auto& v : values) v = normal(rng);
    return Latent(shape, std::move(values));
}

inline double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

inline double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / (v.size() - 1);
}

// Hand-rolled canonical serializer for objects, arrays, strings and integers.
inline std::string oracle_canonical(const nlohmann::json& j) {
    if (j.is_object()) {
        std::vector<std::pair<std::string, nlohmann::json>> items;
        for (auto it = j.begin(); it != j.end(); ++it) items.emplace_back(it.key(), it.value());
        std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::string out = "{";
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (i) out += ",";
            out += "\"" + items[i].first + "\":" + oracle_canonical(items[i].second);
        }
        return out + "}";
    }
    if (j.is_array()) {
        std::string out = "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) out += ",";
            out += oracle_canonical(j[i]);
        }
        return out + "]";
    }
    if (j.is_string()) return "\"" + j.get<std::string>() + "\"";
    if (j.is_number_integer()) return std::to_string(j.get<long long>());
    if (j.is_boolean()) return j.get<bool>() ? "true" : "false";
    if (j.is_null()) return "null";
    throw std::logic_error("oracle_canonical: unsupported value");
}

}  // namespace poa::test
