// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace ssra {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct FileDigest {
    std::string path; // relative to the workdir
    std::string sha256;
};

struct StageCounts {
    long long in = 0;
    long long out = 0;
    long long dropped = 0;
};

// Per-stage provenance record. Digests are recomputed whenever another stage
// consumes these files; a mismatch aborts the run (staleness/tamper check).
struct StageManifest {
    std::string stage;
    std::vector<FileDigest> inputs;
    std::vector<FileDigest> outputs;
    nlohmann::json config_snapshot;
    std::string started_at;
    std::string finished_at;
    StageCounts counts;

    nlohmann::ordered_json to_json() const;
    static StageManifest from_json(const nlohmann::json& j);

    void save(const std::filesystem::path& path) const;
    static StageManifest load(const std::filesystem::path& path);
};

// Recomputes every digest against base/<path>; throws Error(digest) naming
// the first mismatching file.
void verify_digests(const std::vector<FileDigest>& digests,
                    const std::filesystem::path& base, const std::string& stage);

} // namespace ssra
