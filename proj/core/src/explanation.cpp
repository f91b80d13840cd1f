#include "hdm/explanation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "hdm/parallel.hpp"
#include "hdm/text_io.hpp"

namespace hdm {

std::string_view ToString(ShapMethod method) {
  return method == ShapMethod::kExact ? "exact" : "sampled";
}

ShapMethod ParseShapMethod(std::string_view text) {
  if (text == "exact") return ShapMethod::kExact;
  if (text == "sampled") return ShapMethod::kSampled;
  throw InvalidArgument(fmt::format("unknown SHAP method '{}' (exact or sampled)", text));
}

namespace {

void CheckInputs(std::span<const double> x, const Background& background) {
  if (background.empty()) throw InvalidArgument("SHAP background is empty");
  for (const auto& b : background) {
    if (b.size() != x.size()) {
      throw InvalidArgument(fmt::format(
          "SHAP background row has {} values, observation has {}", b.size(), x.size()));
    }
  }
}

// Mean prediction over the background with x substituted where in_coalition.
class CoalitionValue {
 public:
  CoalitionValue(const PredictFn& predict, std::span<const double> x,
                 const Background& background)
      : predict_(predict), x_(x), background_(background), buffer_(x.size()) {}

  template <typename InCoalition>
  ClassVector operator()(InCoalition&& in_coalition) {
    ClassVector sum{};
    for (const auto& b : background_) {
      for (std::size_t j = 0; j < x_.size(); ++j) buffer_[j] = in_coalition(j) ? x_[j] : b[j];
      const ClassVector p = predict_(buffer_);
      for (int c = 0; c < kNumClasses; ++c) sum[c] += p[c];
    }
    const double n = static_cast<double>(background_.size());
    for (double& s : sum) s /= n;
    return sum;
  }

 private:
  const PredictFn& predict_;
  std::span<const double> x_;
  const Background& background_;
  std::vector<double> buffer_;
};

ShapExplanation Skeleton(const PredictFn& predict, std::span<const double> x,
                         const Background& background) {
  ShapExplanation e;
  e.x.assign(x.begin(), x.end());
  e.phi.assign(x.size(), ClassVector{});
  e.standard_error.assign(x.size(), ClassVector{});
  e.prediction = predict(x);
  e.background_size = background.size();
  return e;
}

}  // namespace

ShapExplanation ShapExact(const PredictFn& predict, std::span<const double> x,
                          const Background& background) {
  const std::size_t p = x.size();
  if (p > kMaxExactShapFeatures) {
    throw InvalidArgument(fmt::format(
        "exact SHAP enumerates 2^p coalitions and is limited to p <= {} features "
        "(got {}); use the sampled method instead",
        kMaxExactShapFeatures, p));
  }
  CheckInputs(x, background);
  ShapExplanation e = Skeleton(predict, x, background);
  e.method = ShapMethod::kExact;

  const std::size_t n_masks = std::size_t{1} << p;
  std::vector<ClassVector> value(n_masks);
  CoalitionValue v(predict, x, background);
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    value[mask] = v([mask](std::size_t j) { return ((mask >> j) & 1U) != 0; });
  }
  e.base_value = value[0];

  // weight[s] = s! (p - s - 1)! / p!
  std::vector<double> weight(p);
  for (std::size_t s = 0; s < p; ++s) {
    weight[s] = std::exp(std::lgamma(static_cast<double>(s) + 1.0) +
                         std::lgamma(static_cast<double>(p - s)) -
                         std::lgamma(static_cast<double>(p) + 1.0));
  }
  for (std::size_t j = 0; j < p; ++j) {
    const std::size_t bit = std::size_t{1} << j;
    ClassVector phi{};
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
      if ((mask & bit) != 0) continue;
      const double w = weight[static_cast<std::size_t>(std::popcount(mask))];
      for (int c = 0; c < kNumClasses; ++c) {
        phi[c] += w * (value[mask | bit][c] - value[mask][c]);
      }
    }
    e.phi[j] = phi;
  }
  return e;
}

ShapExplanation ShapSampled(const PredictFn& predict, std::span<const double> x,
                            const Background& background, int n_permutations,
                            std::uint64_t seed) {
  if (n_permutations < 1) throw InvalidArgument("n_permutations must be >= 1");
  CheckInputs(x, background);
  const std::size_t p = x.size();
  ShapExplanation e = Skeleton(predict, x, background);
  e.method = ShapMethod::kSampled;
  e.n_permutations = n_permutations;
  e.seed = seed;

  CoalitionValue v(predict, x, background);
  std::vector<char> present(p, 0);
  const auto in_coalition = [&present](std::size_t j) { return present[j] != 0; };
  e.base_value = v(in_coalition);

  std::vector<ClassVector> sum(p, ClassVector{});
  std::vector<ClassVector> sum_sq(p, ClassVector{});
  std::vector<std::size_t> order(p);
  std::mt19937_64 rng(seed);
  for (int m = 0; m < n_permutations; ++m) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::fill(present.begin(), present.end(), 0);
    ClassVector previous = e.base_value;
    for (std::size_t j : order) {
      present[j] = 1;
      const ClassVector current = v(in_coalition);
      for (int c = 0; c < kNumClasses; ++c) {
        const double delta = current[c] - previous[c];
        sum[j][c] += delta;
        sum_sq[j][c] += delta * delta;
      }
      previous = current;
    }
  }
  const double n = static_cast<double>(n_permutations);
  for (std::size_t j = 0; j < p; ++j) {
    for (int c = 0; c < kNumClasses; ++c) {
      const double mean = sum[j][c] / n;
      e.phi[j][c] = mean;
      if (n_permutations > 1) {
        const double var = std::max(0.0, (sum_sq[j][c] - n * mean * mean) / (n - 1.0));
        e.standard_error[j][c] = std::sqrt(var / n);
      }
    }
  }
  return e;
}

Background SampleBackground(const Dataset& data, std::size_t size, std::uint64_t seed) {
  std::vector<std::size_t> rows(data.n_rows());
  std::iota(rows.begin(), rows.end(), 0);
  if (size < rows.size()) {
    std::mt19937_64 rng(DeriveSeed(seed, "shap.background"));
    for (std::size_t k = 0; k < size; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, rows.size() - 1);
      std::swap(rows[k], rows[pick(rng)]);
    }
    rows.resize(size);
    std::sort(rows.begin(), rows.end());
  }
  Background out;
  for (std::size_t i : rows) {
    const auto r = data.row(i);
    out.emplace_back(r.begin(), r.end());
  }
  return out;
}

std::vector<ShapExplanation> ExplainRows(const PredictFn& predict, const Dataset& data,
                                         const Background& background,
                                         const ExplainOptions& options) {
  if (options.method == ShapMethod::kExact && data.n_features() > kMaxExactShapFeatures) {
    // Fail before any work.
    ShapExact(predict, data.row(0), background);
  }
  const auto names = data.schema().names();
  std::vector<ShapExplanation> out(data.n_rows());
  ParallelFor(data.n_rows(), [&](std::size_t i) {
    out[i] = options.method == ShapMethod::kExact
                 ? ShapExact(predict, data.row(i), background)
                 : ShapSampled(predict, data.row(i), background, options.n_permutations,
                               DeriveSeed(options.seed, "shap.observation", i));
    out[i].observation = i;
    out[i].feature_names = names;
  });
  return out;
}

ImportanceRanking GlobalImportance(std::span<const ShapExplanation> explanations) {
  ImportanceRanking r;
  if (explanations.empty()) return r;
  r.feature_names = explanations.front().feature_names;
  const std::size_t p = explanations.front().phi.size();
  if (!r.feature_names.empty() && r.feature_names.size() != p) {
    throw InvalidArgument("explanation feature names do not match its values");
  }
  r.per_class.assign(p, ClassVector{});
  for (const auto& e : explanations) {
    if (e.phi.size() != p || e.feature_names != r.feature_names) {
      throw InvalidArgument(fmt::format(
          "explanation of observation {} uses a different feature set", e.observation));
    }
    for (std::size_t j = 0; j < p; ++j) {
      for (int c = 0; c < kNumClasses; ++c) r.per_class[j][c] += std::abs(e.phi[j][c]);
    }
  }
  r.total.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    r.total[j] = std::accumulate(r.per_class[j].begin(), r.per_class[j].end(), 0.0);
  }
  r.order.resize(p);
  std::iota(r.order.begin(), r.order.end(), 0);
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](std::size_t a, std::size_t b) { return r.total[a] > r.total[b]; });
  return r;
}

std::vector<DependenceRow> DependenceTable(std::span<const ShapExplanation> explanations,
                                           std::size_t feature, int cls) {
  if (!IsValidLabel(cls)) throw InvalidArgument(fmt::format("class {} outside 0..5", cls));
  std::vector<DependenceRow> rows;
  rows.reserve(explanations.size());
  for (const auto& e : explanations) {
    if (feature >= e.phi.size()) {
      throw InvalidArgument(fmt::format("feature index {} out of range", feature));
    }
    rows.push_back({e.observation, e.x[feature], e.phi[feature][cls]});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const DependenceRow& a, const DependenceRow& b) {
    if (a.feature_value != b.feature_value) return a.feature_value < b.feature_value;
    return a.observation < b.observation;
  });
  return rows;
}

std::string ImportanceCsv(const ImportanceRanking& ranking) {
  std::string out = "feature";
  for (int c = 0; c < kNumClasses; ++c) out += fmt::format(",abs_shap_probability_class_{}", c);
  out += ",abs_shap_probability_total,rank\n";
  for (std::size_t rank = 0; rank < ranking.order.size(); ++rank) {
    const std::size_t j = ranking.order[rank];
    out += ranking.feature_names.empty() ? fmt::format("x{}", j) : ranking.feature_names[j];
    for (double v : ranking.per_class[j]) out += ',' + FormatExact(v);
    out += fmt::format(",{},{}\n", FormatExact(ranking.total[j]), rank + 1);
  }
  return out;
}

std::string DependenceCsv(std::span<const DependenceRow> rows, int cls) {
  std::string out = "observation,feature_value,shap_probability,class\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{}\n", r.observation, FormatExact(r.feature_value),
                       FormatExact(r.phi), cls);
  }
  return out;
}

}  // namespace hdm
