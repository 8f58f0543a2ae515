#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace etdgrid {

inline constexpr const char* kToolName = "etdgrid";
inline constexpr const char* kToolVersion = "1.0.0";

// FNV-1a over raw bytes; cheap, stable, good enough for change detection.
inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("hash: cannot open: " + path.string());
    std::uint64_t h = 14695981039346656037ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        const auto got = static_cast<std::size_t>(in.gcount());
        for (std::size_t i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!in) break;
    }
    return h;
}

inline std::string hash_hex(std::uint64_t h) {
    static const char digits[] = "0123456789abcdef";
    std::string s = "0x";
    for (int shift = 60; shift >= 0; shift -= 4) s += digits[(h >> shift) & 0xf];
    return s;
}

// One hashed file reference; paths are relative (inputs to the working
// directory, outputs to the manifest's own directory) so a manifest never
// pins a machine-specific location.
struct ManifestEntry {
    std::string path;
    std::string hash;
};

// Record of one command run: the resolved configuration (a valid config
// file body, flag overrides already applied), hashed inputs, and hashed
// outputs. Everything a re-run needs; no timestamps, so identical runs
// produce identical manifests.
struct RunManifest {
    std::string command;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    std::vector<ManifestEntry> inputs;
    std::vector<ManifestEntry> outputs;

    void add_input(const std::filesystem::path& path) {
        inputs.push_back({path.generic_string(), hash_hex(fnv1a64_file(path))});
    }

    // out_dir-relative path recorded, file hashed in place.
    void add_output(const std::filesystem::path& out_dir, const std::filesystem::path& file) {
        outputs.push_back({std::filesystem::relative(file, out_dir).generic_string(),
                           hash_hex(fnv1a64_file(file))});
    }
};

inline void save_manifest(const std::filesystem::path& path, const RunManifest& m) {
    nlohmann::ordered_json j;
    j["tool"] = kToolName;
    j["version"] = kToolVersion;
    j["command"] = m.command;
    j["config"] = m.config;
    j["inputs"] = nlohmann::ordered_json::array();
    for (const auto& e : m.inputs) j["inputs"].push_back({{"path", e.path}, {"fnv1a64", e.hash}});
    j["outputs"] = nlohmann::ordered_json::array();
    for (const auto& e : m.outputs) j["outputs"].push_back({{"path", e.path}, {"fnv1a64", e.hash}});

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("manifest: cannot write: " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("manifest: write failed: " + path.string());
}

inline RunManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("manifest: cannot open: " + path.string());
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("manifest: parse error in " + path.string() + ": " + e.what());
    }
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.config = j.at("config");
    for (const auto& e : j.at("inputs"))
        m.inputs.push_back({e.at("path").get<std::string>(), e.at("fnv1a64").get<std::string>()});
    for (const auto& e : j.at("outputs"))
        m.outputs.push_back({e.at("path").get<std::string>(), e.at("fnv1a64").get<std::string>()});
    return m;
}

} // namespace etdgrid
