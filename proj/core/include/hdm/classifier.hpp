#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hdm/common.hpp"
#include "hdm/data_model.hpp"

namespace hdm {

enum class ModelFamily { kOrderedProbit, kRandomForest, kGradientBoosting };

// Canonical short names: "probit", "forest", "gbm".
std::string_view ToString(ModelFamily family);
ModelFamily ParseModelFamily(std::string_view text);

// Hyperparameters by name; each family reads the keys it knows and rejects
// the rest.
using ParamSet = std::map<std::string, double>;

// A fitted six-class model. Inputs are feature vectors ordered as
// feature_names(). Implementations are immutable after fitting, so concurrent
// prediction is safe.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual ModelFamily family() const = 0;
  virtual const std::vector<std::string>& feature_names() const = 0;

  // Class probabilities (vote shares for the forest).
  virtual ClassVector PredictProba(std::span<const double> x) const = 0;
  // Hard prediction; ties go to the lowest class.
  virtual int Predict(std::span<const double> x) const {
    return ArgMax(PredictProba(x));
  }
  // False when PredictProba is a vote tally rather than a probability model.
  virtual bool has_probabilities() const { return true; }

  // Per-feature importance used by recursive elimination.
  virtual std::vector<double> FeatureImportance() const = 0;

  // Self-describing text; LoadClassifier reads it back.
  virtual std::string Serialize() const = 0;

  // Non-empty when the fit did not meet its convergence criterion.
  virtual std::optional<std::string> FitWarning() const { return std::nullopt; }
};

// Fits `family` on every feature column of `data`.
std::unique_ptr<Classifier> FitClassifier(ModelFamily family,
                                          const ParamSet& params,
                                          const Dataset& data,
                                          std::uint64_t seed);

std::unique_ptr<Classifier> ParseClassifier(std::string_view text);
std::unique_ptr<Classifier> LoadClassifier(const std::filesystem::path& path);

// Predictions for every row of `data`, whose columns are matched to the
// model's feature names.
std::vector<int> PredictAll(const Classifier& model, const Dataset& data);
std::vector<ClassVector> PredictProbaAll(const Classifier& model,
                                         const Dataset& data);

// Reads an integer hyperparameter, rejecting non-integral values.
int ParamInt(const ParamSet& params, std::string_view key, int fallback);
double ParamDouble(const ParamSet& params, std::string_view key, double fallback);
// Throws InvalidArgument naming the first key not in `known`.
void RejectUnknownParams(const ParamSet& params,
                         std::span<const std::string_view> known,
                         std::string_view family);

}  // namespace hdm
