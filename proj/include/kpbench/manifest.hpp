#pragma once

#include <map>
#include <string>
#include <vector>

namespace kpbench {

inline constexpr const char* kToolVersion = "0.1.0";

// Replay record written alongside every CLI output. Deliberately contains
// no timestamps so identical runs produce identical manifests.
struct RunManifest {
    std::string tool_version = kToolVersion;
    std::string subcommand;
    std::vector<std::string> args;
    std::map<std::string, std::string> input_hashes;   // path -> fnv1a-64 hex
    std::map<std::string, std::string> output_hashes;
};

// FNV-1a 64-bit over the file contents, lowercase hex.
std::string file_hash_hex(const std::string& path);

void write_manifest(const RunManifest& m, const std::string& path);
RunManifest read_manifest(const std::string& path);

}  // namespace kpbench
