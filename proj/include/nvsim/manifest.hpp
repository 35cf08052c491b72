#pragma once

// Run manifest written next to every output set. It carries no timestamps or
// host data, so identical runs produce identical manifests.

#include <string>
#include <utility>
#include <vector>

namespace nvsim {

inline constexpr const char* kArtifactVersion = "nvsim 1.0.0";

struct RunManifest {
  std::string command;  // subcommand and its arguments
  std::string config;   // resolved config dump
  std::string version = kArtifactVersion;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, sha256
  std::vector<std::pair<std::string, std::string>> outputs;  // path, sha256
};

// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);
std::string sha256_hex(const std::string& bytes);

std::string to_json(const RunManifest& m);
void write_manifest(const std::string& path, const RunManifest& m);

}  // namespace nvsim
