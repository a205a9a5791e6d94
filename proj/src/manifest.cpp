#include "kpbench/manifest.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "kpbench/error.hpp"

namespace kpbench {

std::string file_hash_hex(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open file for hashing: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (f.read(buf, sizeof buf) || f.gcount() > 0) {
        for (std::streamsize i = 0; i < f.gcount(); ++i) {
            h ^= std::uint8_t(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!f) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

void write_manifest(const RunManifest& m, const std::string& path) {
    nlohmann::ordered_json j;
    j["tool_version"] = m.tool_version;
    j["subcommand"] = m.subcommand;
    j["args"] = m.args;
    j["inputs"] = m.input_hashes;
    j["outputs"] = m.output_hashes;
    std::ofstream f(path);
    if (!f) throw Error("cannot write manifest: " + path);
    f << j.dump(2) << '\n';
}

RunManifest read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open manifest: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("manifest " + path + ": " + e.what());
    }
    RunManifest m;
    m.tool_version = j.value("tool_version", "");
    m.subcommand = j.value("subcommand", "");
    m.args = j.value("args", std::vector<std::string>{});
    m.input_hashes = j.value("inputs", std::map<std::string, std::string>{});
    m.output_hashes = j.value("outputs", std::map<std::string, std::string>{});
    return m;
}

}  // namespace kpbench
