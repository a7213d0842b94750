#pragma once

// Run manifests: a canonical config snapshot plus the command, effective
// seed, a git-style hash of the final parameters, and a content hash per
// emitted artifact. Replaying a manifest re-runs the command and checks the
// artifact hashes byte for byte.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qdd/config.hpp"
#include "qdd/sha1.hpp"

namespace qdd {

struct Manifest {
    Config config;  // run sections only (model/schedule/data/optimizer/run)
    std::string command;
    std::uint64_t seed = 0;
    std::string params_hash;                                  // git blob hash of the final params
    std::vector<std::pair<std::string, std::string>> artifacts;  // name -> sha1
};

inline std::string params_content_hash(const std::vector<double>& values) {
    return git_blob_sha1(values.data(), values.size() * sizeof(double));
}

inline std::string manifest_to_text(const Manifest& m) {
    Config out = m.config;
    out.sections.erase("manifest");
    out.sections.erase("artifacts");
    out.set("manifest", "command", m.command);
    out.set("manifest", "seed", std::to_string(m.seed));
    if (!m.params_hash.empty()) out.set("manifest", "params_hash", m.params_hash);
    for (const auto& [name, hash] : m.artifacts) out.set("artifacts", name, hash);
    return out.to_text();
}

inline Manifest manifest_from_text(const std::string& text) {
    Config cfg = parse_config(text);
    validate_config(cfg);
    Manifest m;
    m.command = cfg.get("manifest", "command");
    m.seed = std::stoull(cfg.get("manifest", "seed"));
    m.params_hash = cfg.get_or("manifest", "params_hash", "");
    if (cfg.sections.count("artifacts"))
        for (const auto& [name, hash] : cfg.sections.at("artifacts")) m.artifacts.emplace_back(name, hash);
    cfg.sections.erase("manifest");
    cfg.sections.erase("artifacts");
    m.config = cfg;
    return m;
}

inline void write_manifest(const std::string& path, const Manifest& m) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_manifest: cannot open " + path);
    f << manifest_to_text(m);
}

inline Manifest read_manifest(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_manifest: cannot open " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return manifest_from_text(os.str());
}

}  // namespace qdd
