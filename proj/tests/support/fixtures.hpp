#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hdm/data_model.hpp"
#include "hdm/synthetic.hpp"

namespace hdm::testing {

inline FeatureSchema ContinuousSchema(std::size_t p, const std::string& prefix = "x") {
  std::vector<FeatureColumn> columns;
  for (std::size_t j = 0; j < p; ++j) {
    columns.push_back({prefix + std::to_string(j + 1), FeatureKind::kContinuous,
                       FeatureCategory::kSocioeconomic});
  }
  return FeatureSchema(std::move(columns));
}

inline Dataset MakeDataset(std::size_t p, std::vector<double> values,
                           std::vector<int> labels) {
  return Dataset(ContinuousSchema(p), std::move(values), std::move(labels));
}

// Two Gaussian classes (labels 0 and 1) with unit variance and centers 4
// apart on every coordinate.
inline Dataset Blobs(std::size_t n, std::size_t p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> values;
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    for (std::size_t j = 0; j < p; ++j) values.push_back(4.0 * y + z(rng));
    labels.push_back(y);
  }
  return MakeDataset(p, std::move(values), std::move(labels));
}

// Ordered probit DGP with p standard-normal features and coefficients of
// alternating sign scaled so sd(beta'x) = signal. Thresholds sit at the
// latent quantiles of the cumulative class shares.
inline SyntheticSpec ProbitSpec(std::size_t p, double signal,
                                std::array<double, kNumThresholds> cumulative) {
  SyntheticSpec spec;
  const double b = signal / std::sqrt(static_cast<double>(p));
  for (std::size_t j = 0; j < p; ++j) {
    spec.features.push_back(
        {{"x" + std::to_string(j + 1), FeatureKind::kContinuous,
          FeatureCategory::kSocioeconomic},
         {DistributionKind::kNormal, 0.0, 1.0},
         (j % 2 == 0 ? 1.0 : -1.0) * b});
  }
  const double scale = std::sqrt(1.0 + signal * signal);
  for (int k = 0; k < kNumThresholds; ++k) {
    // Inverse normal CDF via bisection keeps the fixture independent of the
    // library's quantile function.
    double lo = -10.0;
    double hi = 10.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (0.5 * std::erfc(-mid / std::sqrt(2.0)) < cumulative[k] ? lo : hi) = mid;
    }
    spec.thresholds[k] = scale * 0.5 * (lo + hi);
  }
  return spec;
}

}  // namespace hdm::testing
