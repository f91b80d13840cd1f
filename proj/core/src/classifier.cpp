#include "hdm/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "hdm/gradient_boosting.hpp"
#include "hdm/kv_config.hpp"
#include "hdm/ordered_probit.hpp"
#include "hdm/random_forest.hpp"
#include "hdm/text_io.hpp"

namespace hdm {

std::string_view ToString(ModelFamily family) {
  switch (family) {
    case ModelFamily::kOrderedProbit:
      return "probit";
    case ModelFamily::kRandomForest:
      return "forest";
    case ModelFamily::kGradientBoosting:
      return "gbm";
  }
  return "unknown";
}

ModelFamily ParseModelFamily(std::string_view text) {
  if (text == "probit" || text == "ordered_probit") return ModelFamily::kOrderedProbit;
  if (text == "forest" || text == "random_forest") return ModelFamily::kRandomForest;
  if (text == "gbm" || text == "gradient_boosting") return ModelFamily::kGradientBoosting;
  throw InvalidArgument(
      fmt::format("unknown model family '{}' (expected probit, forest or gbm)", text));
}

int ParamInt(const ParamSet& params, std::string_view key, int fallback) {
  const auto it = params.find(std::string(key));
  if (it == params.end()) return fallback;
  const double v = it->second;
  if (!std::isfinite(v) || v != std::floor(v) || std::abs(v) > 1e9) {
    throw InvalidArgument(fmt::format("parameter '{}' must be an integer, got {}", key,
                                      FormatExact(v)));
  }
  return static_cast<int>(v);
}

double ParamDouble(const ParamSet& params, std::string_view key, double fallback) {
  const auto it = params.find(std::string(key));
  if (it == params.end()) return fallback;
  if (!std::isfinite(it->second)) {
    throw InvalidArgument(fmt::format("parameter '{}' must be finite", key));
  }
  return it->second;
}

void RejectUnknownParams(const ParamSet& params,
                         std::span<const std::string_view> known,
                         std::string_view family) {
  for (const auto& [key, value] : params) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw InvalidArgument(fmt::format("unknown {} parameter '{}' (known: {})", family,
                                        key, fmt::join(known, ", ")));
    }
  }
}

namespace {

constexpr std::string_view kProbitKeys[] = {"max_iter", "tolerance"};

class OrderedProbitClassifier : public Classifier {
 public:
  explicit OrderedProbitClassifier(OrderedProbitFit fit) : fit_(std::move(fit)) {}

  ModelFamily family() const override { return ModelFamily::kOrderedProbit; }
  const std::vector<std::string>& feature_names() const override {
    return fit_.feature_names;
  }
  ClassVector PredictProba(std::span<const double> x) const override {
    return ClassProbabilities(fit_.params, x);
  }
  // |t| per coefficient; |beta| when the covariance is unavailable.
  std::vector<double> FeatureImportance() const override {
    std::vector<double> out(fit_.params.beta.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
      const double t = fit_.t_values.size() > j ? fit_.t_values[j]
                                                : std::numeric_limits<double>::quiet_NaN();
      out[j] = std::isfinite(t) ? std::abs(t) : std::abs(fit_.params.beta[j]);
    }
    return out;
  }
  std::string Serialize() const override { return SerializeFit(fit_); }
  std::optional<std::string> FitWarning() const override {
    if (fit_.converged) return std::nullopt;
    return fmt::format("ordered probit did not converge after {} iterations "
                       "(gradient max-norm {}): {}",
                       fit_.iterations, fit_.gradient_max_norm, fit_.message);
  }

 private:
  OrderedProbitFit fit_;
};

}  // namespace

std::unique_ptr<Classifier> FitClassifier(ModelFamily family, const ParamSet& params,
                                          const Dataset& data, std::uint64_t seed) {
  switch (family) {
    case ModelFamily::kOrderedProbit: {
      RejectUnknownParams(params, kProbitKeys, "probit");
      OrderedProbitOptions options;
      options.max_iterations = ParamInt(params, "max_iter", options.max_iterations);
      options.tolerance = ParamDouble(params, "tolerance", options.tolerance);
      options.seed = seed;
      if (options.max_iterations < 1) throw InvalidArgument("probit: max_iter must be >= 1");
      if (!(options.tolerance > 0.0)) throw InvalidArgument("probit: tolerance must be > 0");
      const auto names = data.schema().names();
      return std::make_unique<OrderedProbitClassifier>(
          FitOrderedProbit(data, names, options));
    }
    case ModelFamily::kRandomForest:
      return std::make_unique<RandomForestModel>(
          FitRandomForest(data, RandomForestParams::FromParamSet(params), seed));
    case ModelFamily::kGradientBoosting:
      return std::make_unique<GradientBoostedModel>(
          FitGradientBoosting(data, GbmParams::FromParamSet(params), seed));
  }
  throw InvalidArgument("unknown model family");
}

std::unique_ptr<Classifier> ParseClassifier(std::string_view text) {
  if (text.starts_with("hdm_model forest")) {
    return std::make_unique<RandomForestModel>(RandomForestModel::Parse(text));
  }
  if (text.starts_with("hdm_model gbm")) {
    return std::make_unique<GradientBoostedModel>(GradientBoostedModel::Parse(text));
  }
  const KvConfig kv = KvConfig::Parse(text);
  return std::make_unique<OrderedProbitClassifier>(ParseFit(kv));
}

std::unique_ptr<Classifier> LoadClassifier(const std::filesystem::path& path) {
  try {
    return ParseClassifier(ReadFile(path));
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

namespace {

std::vector<std::size_t> ColumnMap(const Classifier& model, const Dataset& data) {
  std::vector<std::size_t> map;
  for (const auto& name : model.feature_names()) {
    map.push_back(data.schema().RequireIndex(name));
  }
  return map;
}

}  // namespace

std::vector<ClassVector> PredictProbaAll(const Classifier& model, const Dataset& data) {
  const auto map = ColumnMap(model, data);
  std::vector<ClassVector> out(data.n_rows());
  std::vector<double> x(map.size());
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    for (std::size_t j = 0; j < map.size(); ++j) x[j] = data.value(i, map[j]);
    out[i] = model.PredictProba(x);
  }
  return out;
}

std::vector<int> PredictAll(const Classifier& model, const Dataset& data) {
  const auto map = ColumnMap(model, data);
  std::vector<int> out(data.n_rows());
  std::vector<double> x(map.size());
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    for (std::size_t j = 0; j < map.size(); ++j) x[j] = data.value(i, map[j]);
    out[i] = model.Predict(x);
  }
  return out;
}

}  // namespace hdm
