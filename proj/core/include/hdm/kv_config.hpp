#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hdm {

// Flat key=value configuration with `#` comments and optional `[section]`
// headers. Keys before the first header belong to the unnamed section "".
// Order of sections and keys is preserved; a repeated key overwrites the
// earlier value in place.
class KvConfig {
 public:
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;

    const std::string* Find(std::string_view key) const;
    void Set(std::string key, std::string value);
  };

  static KvConfig Parse(std::string_view text);
  static KvConfig Load(const std::filesystem::path& path);

  std::string Serialize() const;

  const std::vector<Section>& sections() const { return sections_; }
  const Section* FindSection(std::string_view name) const;
  Section& GetOrAddSection(std::string_view name);

  // Accessors on the unnamed section.
  const std::string* Find(std::string_view key) const;
  void Set(std::string key, std::string value);

  std::string GetString(std::string_view key) const;
  double GetDouble(std::string_view key) const;
  long long GetInt(std::string_view key) const;
  std::vector<double> GetDoubleList(std::string_view key) const;

 private:
  std::vector<Section> sections_{Section{}};
};

double ParseDoubleOrThrow(std::string_view text, std::string_view what);
long long ParseIntOrThrow(std::string_view text, std::string_view what);
std::vector<double> ParseDoubleList(std::string_view text,
                                    std::string_view what);

}  // namespace hdm
