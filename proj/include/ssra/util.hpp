// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace ssra {

// Deterministic PRNG used wherever sampling must be reproducible across
// platforms and standard libraries (std:: distributions are not portable).
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Unbiased draw in [0, n) (Lemire's method with rejection).
    std::uint64_t below(std::uint64_t n);

    double unit(); // [0, 1)

private:
    std::uint64_t state_;
};

std::uint64_t fnv1a64(std::string_view s);

std::string trim(std::string_view s);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// ISO-8601 UTC timestamp, second resolution.
std::string utc_timestamp();

} // namespace ssra
