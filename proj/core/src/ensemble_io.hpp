#pragma once

// Header lines shared by the forest and boosting model files.

#include <cstdint>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hdm/classifier.hpp"
#include "hdm/text_io.hpp"

namespace hdm::detail {

struct EnsembleHeader {
  std::vector<std::string> features;
  std::uint64_t seed = 0;
  ParamSet params;
};

inline std::string NextLine(std::istream& in, std::string_view expect_prefix) {
  std::string line;
  if (!std::getline(in, line) || !line.starts_with(expect_prefix)) {
    throw DataError("malformed model file: expected '" +
                    std::string(expect_prefix) + "'");
  }
  return line.substr(expect_prefix.size());
}

inline EnsembleHeader ReadEnsembleHeader(std::istream& in,
                                         std::string_view family) {
  if (NextLine(in, "hdm_model ") != family) {
    throw DataError("malformed model file: not a " + std::string(family) +
                    " model");
  }
  EnsembleHeader h;
  const std::string features = NextLine(in, "features ");
  if (!features.empty()) h.features = SplitString(features, ',');
  std::istringstream(NextLine(in, "seed ")) >> h.seed;
  for (const auto& item : SplitString(NextLine(in, "params "), ',')) {
    const auto eq = item.find('=');
    double v = 0.0;
    if (eq == std::string::npos || !ParseDouble(item.substr(eq + 1), v)) {
      throw DataError("malformed model file: bad parameter '" + item + "'");
    }
    h.params[item.substr(0, eq)] = v;
  }
  return h;
}

inline std::string WriteEnsembleHeader(std::string_view family,
                                       const std::vector<std::string>& features,
                                       std::uint64_t seed,
                                       const ParamSet& params) {
  std::string out = "hdm_model " + std::string(family) + '\n';
  out += "features " + JoinStrings(features, ",") + '\n';
  out += "seed " + std::to_string(seed) + '\n';
  std::vector<std::string> kv;
  for (const auto& [k, v] : params) kv.push_back(k + "=" + FormatExact(v));
  out += "params " + JoinStrings(kv, ",") + '\n';
  return out;
}

}  // namespace hdm::detail
