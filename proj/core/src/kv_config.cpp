#include "hdm/kv_config.hpp"

#include "hdm/common.hpp"
#include "hdm/text_io.hpp"

namespace hdm {

const std::string* KvConfig::Section::Find(std::string_view key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

void KvConfig::Section::Set(std::string key, std::string value) {
  for (auto& [k, v] : entries) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries.emplace_back(std::move(key), std::move(value));
}

KvConfig KvConfig::Parse(std::string_view text) {
  KvConfig config;
  Section* current = &config.sections_.front();
  int line_no = 0;
  for (const std::string& raw : SplitString(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw DataError("config line " + std::to_string(line_no) +
                        ": malformed section header");
      }
      current = &config.GetOrAddSection(Trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw DataError("config line " + std::to_string(line_no) +
                      ": expected key=value");
    }
    const std::string_view key = Trim(line.substr(0, eq));
    if (key.empty()) {
      throw DataError("config line " + std::to_string(line_no) +
                      ": empty key");
    }
    current->Set(std::string(key), std::string(Trim(line.substr(eq + 1))));
  }
  return config;
}

KvConfig KvConfig::Load(const std::filesystem::path& path) {
  try {
    return Parse(ReadFile(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string KvConfig::Serialize() const {
  std::string out;
  for (const Section& section : sections_) {
    if (!section.name.empty()) {
      if (!out.empty()) out += '\n';
      out += '[' + section.name + "]\n";
    }
    for (const auto& [k, v] : section.entries) {
      out += k + " = " + v + '\n';
    }
  }
  return out;
}

const KvConfig::Section* KvConfig::FindSection(std::string_view name) const {
  for (const Section& s : sections_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

KvConfig::Section& KvConfig::GetOrAddSection(std::string_view name) {
  for (Section& s : sections_) {
    if (s.name == name) return s;
  }
  sections_.push_back(Section{std::string(name), {}});
  return sections_.back();
}

const std::string* KvConfig::Find(std::string_view key) const {
  return sections_.front().Find(key);
}

void KvConfig::Set(std::string key, std::string value) {
  sections_.front().Set(std::move(key), std::move(value));
}

std::string KvConfig::GetString(std::string_view key) const {
  const std::string* v = Find(key);
  if (v == nullptr) throw DataError("missing key '" + std::string(key) + "'");
  return *v;
}

double KvConfig::GetDouble(std::string_view key) const {
  return ParseDoubleOrThrow(GetString(key), key);
}

long long KvConfig::GetInt(std::string_view key) const {
  return ParseIntOrThrow(GetString(key), key);
}

std::vector<double> KvConfig::GetDoubleList(std::string_view key) const {
  return ParseDoubleList(GetString(key), key);
}

double ParseDoubleOrThrow(std::string_view text, std::string_view what) {
  double value = 0.0;
  if (!ParseDouble(text, value)) {
    throw DataError("'" + std::string(what) + "': cannot parse '" +
                    std::string(text) + "' as a number");
  }
  return value;
}

long long ParseIntOrThrow(std::string_view text, std::string_view what) {
  long long value = 0;
  if (!ParseInt(text, value)) {
    throw DataError("'" + std::string(what) + "': cannot parse '" +
                    std::string(text) + "' as an integer");
  }
  return value;
}

std::vector<double> ParseDoubleList(std::string_view text,
                                    std::string_view what) {
  std::vector<double> values;
  if (Trim(text).empty()) return values;
  for (const std::string& part : SplitString(text, ',')) {
    values.push_back(ParseDoubleOrThrow(part, what));
  }
  return values;
}

}  // namespace hdm
