#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace hdm::cli {

using Settings = std::vector<std::pair<std::string, std::string>>;

std::string Sha256Hex(std::string_view bytes);
std::string FileSha256(const std::filesystem::path& path);

struct FileDigest {
  std::string path;
  std::string sha256;
};

// Everything needed to repeat a run: the command, its fully resolved
// settings (flag names without dashes) and digests of every file read and
// written. The worker-thread count is deliberately absent because outputs do
// not depend on it.
struct Manifest {
  Manifest() = default;
  Manifest(std::string command, std::uint64_t seed, Settings settings)
      : command(std::move(command)), seed(seed), settings(std::move(settings)) {}

  std::string command;
  std::uint64_t seed = 0;
  Settings settings;
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;

  void AddInput(const std::filesystem::path& path);
  void AddOutput(const std::filesystem::path& path);
  std::string SettingsHash() const;
  std::string ToJson() const;
  static Manifest FromJson(std::string_view text);
  // argv (without the program name) that repeats the run.
  std::vector<std::string> CommandLine() const;
};

}  // namespace hdm::cli
