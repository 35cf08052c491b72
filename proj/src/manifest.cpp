#include "nvsim/manifest.hpp"

#include <openssl/evp.h>

#include <cerrno>
#include <cstring>
#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <sstream>

#include "nvsim/error.hpp"

namespace nvsim {

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw NumericalError("sha256: digest computation failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot read '{}': {}", path, std::strerror(errno)));
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

std::string to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["version"] = m.version;
  j["command"] = m.command;
  j["config"] = m.config;
  auto files = [](const auto& list) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [path, digest] : list) arr.push_back({{"path", path}, {"sha256", digest}});
    return arr;
  };
  j["inputs"] = files(m.inputs);
  j["outputs"] = files(m.outputs);
  return j.dump(2) + "\n";
}

void write_manifest(const std::string& path, const RunManifest& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError(fmt::format("cannot write '{}': {}", path, std::strerror(errno)));
  out << to_json(m);
  if (!out) throw InputError(fmt::format("error writing '{}': {}", path, std::strerror(errno)));
}

}  // namespace nvsim
