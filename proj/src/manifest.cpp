// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#include "ssra/manifest.hpp"

#include <openssl/evp.h>

#include <cstdio>

#include "ssra/error.hpp"
#include "ssra/util.hpp"

namespace ssra {

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &digest_len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorKind::stage, "SHA-256 computation failed");
    }
    std::string hex;
    hex.reserve(2 * digest_len);
    static const char* kHex = "0123456789abcdef";
    for (unsigned int i = 0; i < digest_len; ++i) {
        hex.push_back(kHex[digest[i] >> 4]);
        hex.push_back(kHex[digest[i] & 0x0F]);
    }
    return hex;
}

std::string sha256_file(const std::filesystem::path& path) {
    return sha256_hex(read_file(path));
}

nlohmann::ordered_json StageManifest::to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["stage"] = stage;
    auto digests = [](const std::vector<FileDigest>& list) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const FileDigest& d : list) {
            arr.push_back({{"path", d.path}, {"sha256", d.sha256}});
        }
        return arr;
    };
    j["inputs"] = digests(inputs);
    j["outputs"] = digests(outputs);
    j["config"] = config_snapshot;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    j["counts"] = {{"in", counts.in}, {"out", counts.out}, {"dropped", counts.dropped}};
    return j;
}

StageManifest StageManifest::from_json(const nlohmann::json& j) {
    StageManifest m;
    m.stage = j.at("stage").get<std::string>();
    auto parse_digests = [](const nlohmann::json& arr) {
        std::vector<FileDigest> list;
        for (const auto& e : arr) {
            list.push_back({e.at("path").get<std::string>(), e.at("sha256").get<std::string>()});
        }
        return list;
    };
    m.inputs = parse_digests(j.at("inputs"));
    m.outputs = parse_digests(j.at("outputs"));
    m.config_snapshot = j.value("config", nlohmann::json::object());
    m.started_at = j.value("started_at", std::string{});
    m.finished_at = j.value("finished_at", std::string{});
    if (j.contains("counts")) {
        m.counts.in = j.at("counts").value("in", 0LL);
        m.counts.out = j.at("counts").value("out", 0LL);
        m.counts.dropped = j.at("counts").value("dropped", 0LL);
    }
    return m;
}

void StageManifest::save(const std::filesystem::path& path) const {
    write_file(path, to_json().dump(2) + "\n");
}

StageManifest StageManifest::load(const std::filesystem::path& path) {
    try {
        return from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, "corrupt manifest " + path.string() + ": " + e.what());
    }
}

void verify_digests(const std::vector<FileDigest>& digests,
                    const std::filesystem::path& base, const std::string& stage) {
    for (const FileDigest& d : digests) {
        const std::filesystem::path file = base / d.path;
        if (!std::filesystem::exists(file)) {
            throw Error(ErrorKind::digest,
                        "stage " + stage + ": recorded file missing: " + d.path);
        }
        const std::string actual = sha256_file(file);
        if (actual != d.sha256) {
            throw Error(ErrorKind::digest, "stage " + stage + ": digest mismatch for " +
                                               d.path + " (expected " + d.sha256 +
                                               ", found " + actual + ")");
        }
    }
}

} // namespace ssra
