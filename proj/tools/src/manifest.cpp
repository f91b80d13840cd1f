#include "manifest.hpp"

#include <array>
#include <memory>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "hdm/common.hpp"
#include "hdm/text_io.hpp"

namespace hdm::cli {

std::string Sha256Hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                               &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &length) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string FileSha256(const std::filesystem::path& path) {
  return Sha256Hex(ReadFile(path));
}

void Manifest::AddInput(const std::filesystem::path& path) {
  inputs.push_back({path.string(), FileSha256(path)});
}

void Manifest::AddOutput(const std::filesystem::path& path) {
  outputs.push_back({path.string(), FileSha256(path)});
}

std::string Manifest::SettingsHash() const {
  std::string canonical = command + '\n';
  for (const auto& [key, value] : settings) canonical += key + '=' + value + '\n';
  return Sha256Hex(canonical);
}

std::string Manifest::ToJson() const {
  using Json = nlohmann::ordered_json;
  Json doc;
  doc["tool"] = "hdm";
  doc["command"] = command;
  doc["seed"] = seed;
  Json s = Json::object();
  for (const auto& [key, value] : settings) s[key] = value;
  doc["settings"] = std::move(s);
  doc["config_sha256"] = SettingsHash();
  const auto digests = [](const std::vector<FileDigest>& files) {
    Json out = Json::array();
    for (const auto& f : files) out.push_back({{"path", f.path}, {"sha256", f.sha256}});
    return out;
  };
  doc["inputs"] = digests(inputs);
  doc["outputs"] = digests(outputs);
  return doc.dump(2) + '\n';
}

Manifest Manifest::FromJson(std::string_view text) {
  using Json = nlohmann::ordered_json;
  Manifest m;
  try {
    const Json doc = Json::parse(text);
    m.command = doc.at("command").get<std::string>();
    m.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& [key, value] : doc.at("settings").items()) {
      m.settings.emplace_back(key, value.get<std::string>());
    }
    const auto digests = [](const Json& files) {
      std::vector<FileDigest> out;
      for (const auto& f : files) {
        out.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>()});
      }
      return out;
    };
    m.inputs = digests(doc.at("inputs"));
    m.outputs = digests(doc.at("outputs"));
    if (doc.at("config_sha256").get<std::string>() != m.SettingsHash()) {
      throw DataError("manifest settings do not match their recorded hash");
    }
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

std::vector<std::string> Manifest::CommandLine() const {
  std::vector<std::string> argv{command};
  for (const auto& [key, value] : settings) {
    if (value.empty()) continue;
    argv.push_back("--" + key);
    argv.push_back(value);
  }
  return argv;
}

}  // namespace hdm::cli
