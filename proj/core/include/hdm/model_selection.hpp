#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hdm/classifier.hpp"
#include "hdm/data_model.hpp"
#include "hdm/kv_config.hpp"

namespace hdm {

// Stratified folds: each class is shuffled with DeriveSeed(seed, "cv.folds")
// and dealt round-robin, continuing the deal position across classes, so fold
// sizes and per-class fold counts each differ by at most one. Every fold is
// sorted ascending. Throws InvalidArgument unless 2 <= k <= n.
std::vector<std::vector<std::size_t>> KFoldIndices(std::span<const int> labels,
                                                   int k, std::uint64_t seed);

struct FoldResult {
  // Empty when the fit failed.
  std::optional<double> accuracy;
  std::string error;
  // Non-empty when the fit finished but did not converge.
  std::string warning;
};

struct CrossValidationResult {
  std::vector<FoldResult> folds;
  // Mean over successful folds; NaN when every fold failed.
  double mean_accuracy = 0.0;
  int n_failed = 0;
};

// Fold f is fitted with DeriveSeed(seed, "cv.fit", f). Folds run concurrently.
CrossValidationResult CrossValidate(ModelFamily family, const ParamSet& params,
                                    const Dataset& data, int k, std::uint64_t seed);

struct HyperparamRange {
  enum class Kind { kInteger, kReal, kCategorical };
  std::string name;
  Kind kind = Kind::kReal;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> choices;

  static HyperparamRange Integer(std::string name, long long lower, long long upper);
  static HyperparamRange Real(std::string name, double lower, double upper);
  static HyperparamRange Categorical(std::string name, std::vector<double> choices);
};

struct HyperparamDomain {
  std::vector<HyperparamRange> ranges;

  // Throws InvalidArgument on an empty domain, empty or inverted ranges,
  // non-integral integer bounds or duplicate names.
  void Validate() const;
  // One uniform draw per range, in range order.
  ParamSet Draw(std::mt19937_64& rng) const;

  static HyperparamDomain Default(ModelFamily family, std::size_t n_features);
};

// Lines `name = int:lo:hi`, `name = real:lo:hi` or `name = cat:a|b|c` in the
// given section.
HyperparamDomain ParseHyperparamDomain(const KvConfig& config,
                                       std::string_view section);
std::string FormatHyperparamDomain(const HyperparamDomain& domain);

struct SearchTrial {
  ParamSet params;
  CrossValidationResult cv;
};

struct SearchResult {
  std::vector<SearchTrial> trials;
  std::size_t best_index = 0;
  ParamSet best_params;
  double best_score = 0.0;
};

// Draw i comes from DeriveSeed(seed, "search.draw", i); every trial is scored
// by CrossValidate with `seed` itself, so trials share folds. Ties go to the
// earlier draw. Throws Error when every trial failed.
SearchResult RandomizedSearch(ModelFamily family, const HyperparamDomain& domain,
                              int n_draws, const Dataset& data, int k,
                              std::uint64_t seed);

struct RfeStep {
  std::vector<std::string> features;
  double mean_accuracy = 0.0;
  // Empty for the final step.
  std::string eliminated;
};

struct SelectionResult {
  // Elimination order: first entry dropped first, last entry most important.
  std::vector<std::string> ranked_features;
  std::vector<std::string> retained_features;
  // One entry per feature count visited, largest first.
  std::vector<RfeStep> steps;
};

// Raised when a fit fails during elimination; carries the steps completed so
// far.
class RfeAborted : public Error {
 public:
  RfeAborted(const std::string& message, SelectionResult partial)
      : Error(message), partial_(std::move(partial)) {}
  const SelectionResult& partial() const { return partial_; }

 private:
  SelectionResult partial_;
};

inline constexpr double kRfeAccuracyTolerance = 0.01;

// Each step scores the current set by CrossValidate(seed), refits on all rows
// with DeriveSeed(seed, "rfe.fit") and drops the feature with the lowest
// Classifier::FeatureImportance (ties drop the later column). Stops at
// target_count; without one it runs to a single feature and retains the
// smallest set scoring within kRfeAccuracyTolerance of the best step.
SelectionResult Rfe(ModelFamily family, const ParamSet& params, const Dataset& data,
                    int k, std::optional<std::size_t> target_count,
                    std::uint64_t seed);

// CSV: draw, one column per parameter, mean_accuracy, n_failed, fold scores.
std::string FormatSearchLog(const SearchResult& result);
// CSV: step, n_features, mean_accuracy, eliminated, retained.
std::string FormatRfeLog(const SelectionResult& result);

}  // namespace hdm
