#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include "gravitykg/errors.hpp"
#include "gravitykg/version.hpp"

namespace gravitykg {

inline std::string sha256_hex(const void* data, std::size_t size) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    if (EVP_Digest(data, size, digest, &digest_len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(digest_len * 2);
    for (unsigned int i = 0; i < digest_len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

inline std::string sha256_string(const std::string& s) { return sha256_hex(s.data(), s.size()); }

inline std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file for digest: " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return sha256_string(content);
}

inline std::string iso8601_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Run provenance: what was invoked, on which inputs, producing which files.
struct RunManifest {
    std::string command_line;
    std::string config_digest;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> input_digests;    // path -> sha256
    std::map<std::string, std::string> artifact_digests; // path -> sha256
    std::string started_at;
    std::string finished_at;
};

inline void write_manifest(const std::string& path, const RunManifest& manifest) {
    nlohmann::json j;
    j["command_line"] = manifest.command_line;
    j["config_digest"] = manifest.config_digest;
    j["seed"] = manifest.seed;
    j["inputs"] = manifest.input_digests;
    j["artifacts"] = manifest.artifact_digests;
    j["started_at"] = manifest.started_at;
    j["finished_at"] = manifest.finished_at;
    j["version"] = kVersion;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open file for writing: " + path);
    out << j.dump(2) << '\n';
}

} // namespace gravitykg
