#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hdm/common.hpp"
#include "hdm/data_model.hpp"
#include "hdm/kv_config.hpp"

namespace hdm {

// Households flagged as never shopping online carry a 1 here and are forced
// into class 0 by the generator.
inline constexpr std::string_view kStructuralZeroColumn = "Never_shop_online";

enum class DistributionKind { kNormal, kBernoulli, kUniform };

// normal: (mean, sd); bernoulli: (p, unused); uniform: (lower, upper).
struct FeatureDistribution {
  DistributionKind kind = DistributionKind::kNormal;
  double a = 0.0;
  double b = 1.0;
};

struct SyntheticFeature {
  FeatureColumn column;
  FeatureDistribution distribution;
  double beta = 0.0;
};

// Known ordinal data-generating process: latent = beta'x + N(0,1), binned by
// five increasing thresholds, with an optional structural-zero mechanism.
struct SyntheticSpec {
  std::vector<SyntheticFeature> features;
  std::array<double, kNumThresholds> thresholds{-1.5, -0.5, 0.5, 1.5, 2.5};
  double structural_zero_rate = 0.0;

  // Throws InvalidArgument naming the offending field.
  void Validate() const;
  std::vector<double> beta() const;
  FeatureSchema schema() const;
};

// File form: unnamed section holds `thresholds` (comma list) and
// `structural_zero_rate`; one [column] section per feature with `kind`,
// `category`, `distribution` (normal|bernoulli|uniform), the distribution
// parameters (`mean`,`sd` | `p` | `lower`,`upper`) and `beta`.
SyntheticSpec ParseSyntheticSpec(const KvConfig& config);
SyntheticSpec LoadSyntheticSpec(const std::filesystem::path& path);
std::string FormatSyntheticSpec(const SyntheticSpec& spec);

// Sixteen household, mobility and land-use covariates named after the survey
// codes, plus the structural-zero flag.
SyntheticSpec DefaultSyntheticSpec();

// If structural_zero_rate > 0 and the spec has no Never_shop_online feature,
// one is appended (beta 0). Feature draws and latent errors use one random
// stream and structural-zero flags another, so changing the rate never moves
// the non-zero part of the sample.
Dataset GenerateSynthetic(const SyntheticSpec& spec, std::size_t n,
                          std::uint64_t seed);

}  // namespace hdm
