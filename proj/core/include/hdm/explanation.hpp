#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hdm/common.hpp"
#include "hdm/data_model.hpp"

namespace hdm {

// Per-class probabilities for one feature vector. Must be safe to call
// concurrently.
using PredictFn = std::function<ClassVector(std::span<const double>)>;

// Background rows, each of width p.
using Background = std::vector<std::vector<double>>;

enum class ShapMethod { kExact, kSampled };
std::string_view ToString(ShapMethod method);
ShapMethod ParseShapMethod(std::string_view text);

inline constexpr std::size_t kMaxExactShapFeatures = 15;

// Shapley values on the probability scale for one observation. The value of
// a coalition S is the mean prediction over background rows with x
// substituted on S.
struct ShapExplanation {
  std::size_t observation = 0;
  std::vector<std::string> feature_names;
  std::vector<double> x;
  // v(empty set) per class.
  ClassVector base_value{};
  // phi[j][c].
  std::vector<ClassVector> phi;
  // Sampling standard error of phi; zeros for the exact method.
  std::vector<ClassVector> standard_error;
  // Model output at x.
  ClassVector prediction{};
  ShapMethod method = ShapMethod::kExact;
  int n_permutations = 0;
  std::uint64_t seed = 0;
  std::size_t background_size = 0;
};

// Full coalition enumeration. Throws InvalidArgument for p > 15 (use
// ShapSampled instead) or an empty or ragged background.
ShapExplanation ShapExact(const PredictFn& predict, std::span<const double> x,
                          const Background& background);

// Mean of marginal contributions over n_permutations uniformly drawn feature
// orderings seeded by `seed`.
ShapExplanation ShapSampled(const PredictFn& predict, std::span<const double> x,
                            const Background& background, int n_permutations,
                            std::uint64_t seed);

// `size` rows drawn without replacement with DeriveSeed(seed,
// "shap.background"), in dataset order; all rows when size >= n.
Background SampleBackground(const Dataset& data, std::size_t size,
                            std::uint64_t seed);

struct ExplainOptions {
  ShapMethod method = ShapMethod::kExact;
  int n_permutations = 2000;
  std::uint64_t seed = 0;
};

// Explains every row of `data` (columns in model order). Row i of the sampled
// method uses DeriveSeed(seed, "shap.observation", i). Rows run concurrently.
std::vector<ShapExplanation> ExplainRows(const PredictFn& predict, const Dataset& data,
                                         const Background& background,
                                         const ExplainOptions& options);

struct ImportanceRanking {
  std::vector<std::string> feature_names;
  // Sum over observations of |phi|, per feature and class.
  std::vector<ClassVector> per_class;
  // Sum over classes of per_class.
  std::vector<double> total;
  // Feature indices by descending total; ties keep the lower index first.
  std::vector<std::size_t> order;
};

// Throws InvalidArgument when the explanations disagree on the feature set.
ImportanceRanking GlobalImportance(std::span<const ShapExplanation> explanations);

struct DependenceRow {
  std::size_t observation = 0;
  double feature_value = 0.0;
  double phi = 0.0;
};

// One row per explanation, sorted by feature value (then observation).
std::vector<DependenceRow> DependenceTable(std::span<const ShapExplanation> explanations,
                                           std::size_t feature, int cls);

// feature, |SHAP| per class, total, rank (1 = most important).
std::string ImportanceCsv(const ImportanceRanking& ranking);
// observation, feature value, SHAP value, class.
std::string DependenceCsv(std::span<const DependenceRow> rows, int cls);

}  // namespace hdm
