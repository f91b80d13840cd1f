#include "hdm/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "hdm/text_io.hpp"

namespace hdm {

namespace {

std::string_view ToString(DistributionKind kind) {
  switch (kind) {
    case DistributionKind::kNormal: return "normal";
    case DistributionKind::kBernoulli: return "bernoulli";
    case DistributionKind::kUniform: return "uniform";
  }
  return "normal";
}

DistributionKind ParseDistributionKind(std::string_view text) {
  for (auto k : {DistributionKind::kNormal, DistributionKind::kBernoulli,
                 DistributionKind::kUniform}) {
    if (ToString(k) == text) return k;
  }
  throw DataError("unknown distribution '" + std::string(text) + "'");
}

int LabelFromLatent(double latent,
                    const std::array<double, kNumThresholds>& thresholds) {
  int label = 0;
  while (label < kNumThresholds && latent > thresholds[label]) ++label;
  return label;
}

SyntheticSpec WithStructuralZeroColumn(SyntheticSpec spec) {
  if (spec.structural_zero_rate <= 0.0) return spec;
  const bool present = std::any_of(
      spec.features.begin(), spec.features.end(),
      [](const auto& f) { return f.column.name == kStructuralZeroColumn; });
  if (!present) {
    spec.features.push_back(
        {{std::string(kStructuralZeroColumn), FeatureKind::kBinary,
          FeatureCategory::kSocioeconomic},
         {DistributionKind::kBernoulli, 0.0, 0.0},
         0.0});
  }
  return spec;
}

}  // namespace

void SyntheticSpec::Validate() const {
  if (features.empty()) throw InvalidArgument("synthetic spec has no features");
  for (int k = 1; k < kNumThresholds; ++k) {
    if (!(thresholds[k] > thresholds[k - 1])) {
      throw InvalidArgument("synthetic spec thresholds must be strictly increasing");
    }
  }
  for (double t : thresholds) {
    if (!std::isfinite(t)) throw InvalidArgument("synthetic spec threshold is not finite");
  }
  if (!(structural_zero_rate >= 0.0 && structural_zero_rate <= 1.0)) {
    throw InvalidArgument("structural_zero_rate must lie in [0, 1]");
  }
  for (const auto& f : features) {
    const auto& d = f.distribution;
    const std::string& name = f.column.name;
    if (!std::isfinite(f.beta) || !std::isfinite(d.a) || !std::isfinite(d.b)) {
      throw InvalidArgument("feature '" + name + "': non-finite parameter");
    }
    if (name == kStructuralZeroColumn) {
      if (f.column.kind != FeatureKind::kBinary) {
        throw InvalidArgument("feature '" + name + "' must be binary");
      }
      continue;  // Values come from the structural-zero flag.
    }
    switch (d.kind) {
      case DistributionKind::kNormal:
        if (!(d.b >= 0.0)) throw InvalidArgument("feature '" + name + "': sd < 0");
        if (f.column.kind == FeatureKind::kBinary ||
            f.column.kind == FeatureKind::kPercentage ||
            f.column.kind == FeatureKind::kCount) {
          throw InvalidArgument("feature '" + name + "': normal draws need kind continuous");
        }
        break;
      case DistributionKind::kBernoulli:
        if (!(d.a >= 0.0 && d.a <= 1.0)) {
          throw InvalidArgument("feature '" + name + "': bernoulli p outside [0, 1]");
        }
        break;
      case DistributionKind::kUniform:
        if (!(d.a <= d.b)) {
          throw InvalidArgument("feature '" + name + "': uniform lower > upper");
        }
        if (f.column.kind == FeatureKind::kBinary) {
          throw InvalidArgument("feature '" + name + "': binary kind needs bernoulli draws");
        }
        if (f.column.kind == FeatureKind::kPercentage && (d.a < 0.0 || d.b > 1.0)) {
          throw InvalidArgument("feature '" + name + "': percentage range outside [0, 1]");
        }
        if (f.column.kind == FeatureKind::kCount) {
          throw InvalidArgument("feature '" + name + "': uniform draws need kind continuous");
        }
        break;
    }
  }
  (void)schema();  // name uniqueness
}

std::vector<double> SyntheticSpec::beta() const {
  std::vector<double> out;
  for (const auto& f : features) out.push_back(f.beta);
  return out;
}

FeatureSchema SyntheticSpec::schema() const {
  std::vector<FeatureColumn> columns;
  for (const auto& f : features) columns.push_back(f.column);
  return FeatureSchema(std::move(columns));
}

SyntheticSpec ParseSyntheticSpec(const KvConfig& config) {
  SyntheticSpec spec;
  if (const std::string* t = config.Find("thresholds")) {
    const auto values = ParseDoubleList(*t, "thresholds");
    if (values.size() != kNumThresholds) {
      throw DataError("thresholds: expected 5 values");
    }
    std::copy(values.begin(), values.end(), spec.thresholds.begin());
  }
  if (const std::string* r = config.Find("structural_zero_rate")) {
    spec.structural_zero_rate = ParseDoubleOrThrow(*r, "structural_zero_rate");
  }
  for (const auto& section : config.sections()) {
    if (section.name.empty()) continue;
    const auto get = [&](std::string_view key) -> const std::string* {
      return section.Find(key);
    };
    const auto require = [&](std::string_view key) {
      const std::string* v = get(key);
      if (v == nullptr) {
        throw DataError("[" + section.name + "]: missing key '" +
                        std::string(key) + "'");
      }
      return ParseDoubleOrThrow(*v, section.name + "." + std::string(key));
    };
    SyntheticFeature f;
    f.column.name = section.name;
    if (const auto* k = get("kind")) f.column.kind = ParseFeatureKind(*k);
    if (const auto* c = get("category")) f.column.category = ParseFeatureCategory(*c);
    if (const auto* b = get("beta")) f.beta = ParseDoubleOrThrow(*b, section.name + ".beta");
    const std::string* dist = get("distribution");
    f.distribution.kind = dist ? ParseDistributionKind(*dist)
                               : (section.name == kStructuralZeroColumn
                                      ? DistributionKind::kBernoulli
                                      : DistributionKind::kNormal);
    if (section.name != kStructuralZeroColumn) {
      switch (f.distribution.kind) {
        case DistributionKind::kNormal:
          f.distribution.a = require("mean");
          f.distribution.b = require("sd");
          break;
        case DistributionKind::kBernoulli:
          f.distribution.a = require("p");
          f.distribution.b = 0.0;
          break;
        case DistributionKind::kUniform:
          f.distribution.a = require("lower");
          f.distribution.b = require("upper");
          break;
      }
    } else {
      f.column.kind = FeatureKind::kBinary;
    }
    spec.features.push_back(std::move(f));
  }
  try {
    spec.Validate();
  } catch (const InvalidArgument& e) {
    throw DataError(e.what());
  }
  return spec;
}

SyntheticSpec LoadSyntheticSpec(const std::filesystem::path& path) {
  try {
    return ParseSyntheticSpec(KvConfig::Load(path));
  } catch (const DataError& e) {
    const std::string what = e.what();
    if (what.starts_with(path.string())) throw;
    throw DataError(path.string() + ": " + what);
  }
}

std::string FormatSyntheticSpec(const SyntheticSpec& spec) {
  KvConfig config;
  std::vector<std::string> t;
  for (double v : spec.thresholds) t.push_back(FormatExact(v));
  config.Set("thresholds", JoinStrings(t, ","));
  config.Set("structural_zero_rate", FormatExact(spec.structural_zero_rate));
  for (const auto& f : spec.features) {
    auto& s = config.GetOrAddSection(f.column.name);
    s.Set("kind", std::string(ToString(f.column.kind)));
    s.Set("category", std::string(ToString(f.column.category)));
    s.Set("beta", FormatExact(f.beta));
    if (f.column.name == kStructuralZeroColumn) continue;
    s.Set("distribution", std::string(ToString(f.distribution.kind)));
    switch (f.distribution.kind) {
      case DistributionKind::kNormal:
        s.Set("mean", FormatExact(f.distribution.a));
        s.Set("sd", FormatExact(f.distribution.b));
        break;
      case DistributionKind::kBernoulli:
        s.Set("p", FormatExact(f.distribution.a));
        break;
      case DistributionKind::kUniform:
        s.Set("lower", FormatExact(f.distribution.a));
        s.Set("upper", FormatExact(f.distribution.b));
        break;
    }
  }
  return config.Serialize();
}

SyntheticSpec DefaultSyntheticSpec() {
  using K = FeatureKind;
  using C = FeatureCategory;
  using D = DistributionKind;
  const auto f = [](std::string name, K kind, C category, D dist, double a,
                    double b, double beta) {
    return SyntheticFeature{{std::move(name), kind, category}, {dist, a, b}, beta};
  };
  SyntheticSpec spec;
  spec.features = {
      f("HH_tenure_rent", K::kBinary, C::kSocioeconomic, D::kBernoulli, 0.35, 0, 0.26),
      f("HH_dwelling_types_aprt", K::kBinary, C::kSocioeconomic, D::kBernoulli, 0.40, 0, -0.21),
      f("HH_income_15_39", K::kBinary, C::kSocioeconomic, D::kBernoulli, 0.15, 0, -0.29),
      f("HH_male_precentage", K::kPercentage, C::kSocioeconomic, D::kUniform, 0.0, 1.0, -0.41),
      f("HH_average_age_log", K::kContinuous, C::kSocioeconomic, D::kNormal, 3.7, 0.35, -0.50),
      f("HH_worker_schedule_flex", K::kBinary, C::kSocioeconomic, D::kBernoulli, 0.30, 0, 0.16),
      f("Online_grocery_membership", K::kBinary, C::kSocioeconomic, D::kBernoulli, 0.25, 0, 0.73),
      f("HH_bike_share", K::kBinary, C::kSocioeconomic, D::kBernoulli, 0.08, 0, 0.44),
      f("HH_E_bikes_scooters", K::kBinary, C::kSocioeconomic, D::kBernoulli, 0.05, 0, 0.53),
      f("HH_driver_percentage", K::kPercentage, C::kSocioeconomic, D::kUniform, 0.0, 1.0, -0.25),
      f("EPOI_Education_log", K::kContinuous, C::kLandUse, D::kUniform, 0.0, 4.0, 0.14),
      f("EPOI_Recreation_log", K::kContinuous, C::kLandUse, D::kUniform, 0.0, 4.0, 0.09),
      f("EPOI_Public_log", K::kContinuous, C::kLandUse, D::kUniform, 0.0, 3.0, -0.36),
      f("LU_Commercial_area_log", K::kContinuous, C::kLandUse, D::kUniform, 0.0, 12.0, -0.01),
      f("Peel", K::kBinary, C::kLandUse, D::kBernoulli, 0.25, 0, -0.22),
      f(std::string(kStructuralZeroColumn), K::kBinary, C::kSocioeconomic, D::kBernoulli, 0, 0, 0.0),
  };
  spec.thresholds = {-2.77, -2.07, -1.55, -1.18, -0.88};
  spec.structural_zero_rate = 0.045;
  return spec;
}

Dataset GenerateSynthetic(const SyntheticSpec& input_spec, std::size_t n,
                          std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("synthetic sample size must be >= 1");
  const SyntheticSpec spec = WithStructuralZeroColumn(input_spec);
  spec.Validate();
  const std::size_t p = spec.features.size();

  std::mt19937_64 feature_rng(DeriveSeed(seed, "synthetic.features"));
  std::mt19937_64 zero_rng(DeriveSeed(seed, "synthetic.structural_zero"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> standard_normal(0.0, 1.0);

  std::vector<double> values(n * p);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    double latent = 0.0;
    std::ptrdiff_t zero_column = -1;
    for (std::size_t j = 0; j < p; ++j) {
      const auto& f = spec.features[j];
      const auto& d = f.distribution;
      double v = 0.0;
      switch (d.kind) {
        case DistributionKind::kNormal:
          v = d.a + d.b * standard_normal(feature_rng);
          break;
        case DistributionKind::kBernoulli:
          v = unit(feature_rng) < d.a ? 1.0 : 0.0;
          break;
        case DistributionKind::kUniform:
          v = d.a + (d.b - d.a) * unit(feature_rng);
          break;
      }
      if (f.column.name == kStructuralZeroColumn) {
        zero_column = static_cast<std::ptrdiff_t>(j);
        v = 0.0;
      }
      values[i * p + j] = v;
      latent += f.beta * v;
    }
    latent += standard_normal(feature_rng);
    labels[i] = LabelFromLatent(latent, spec.thresholds);
    const bool structural_zero = unit(zero_rng) < spec.structural_zero_rate;
    if (structural_zero) {
      labels[i] = 0;
      if (zero_column >= 0) values[i * p + static_cast<std::size_t>(zero_column)] = 1.0;
    }
  }
  return Dataset(spec.schema(), std::move(values), std::move(labels));
}

}  // namespace hdm
