#include "hdm/gradient_boosting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "ensemble_io.hpp"
#include "hdm/parallel.hpp"
#include "hdm/summation.hpp"
#include "hdm/text_io.hpp"

namespace hdm {

namespace {
constexpr std::string_view kGbmKeys[] = {
    "n_rounds",  "learning_rate",    "max_depth",       "lambda_l2",
    "gamma_split", "column_subsample", "min_child_weight"};
constexpr double kBaseScoreFloor = 1e-6;
}  // namespace

GbmParams GbmParams::FromParamSet(const ParamSet& params) {
  RejectUnknownParams(params, kGbmKeys, "gbm");
  GbmParams out;
  out.n_rounds = ParamInt(params, "n_rounds", out.n_rounds);
  out.learning_rate = ParamDouble(params, "learning_rate", out.learning_rate);
  out.max_depth = ParamInt(params, "max_depth", out.max_depth);
  out.lambda_l2 = ParamDouble(params, "lambda_l2", out.lambda_l2);
  out.gamma_split = ParamDouble(params, "gamma_split", out.gamma_split);
  out.column_subsample = ParamDouble(params, "column_subsample", out.column_subsample);
  out.min_child_weight = ParamDouble(params, "min_child_weight", out.min_child_weight);
  return out;
}

ParamSet GbmParams::ToParamSet() const {
  return {{"n_rounds", n_rounds},
          {"learning_rate", learning_rate},
          {"max_depth", max_depth},
          {"lambda_l2", lambda_l2},
          {"gamma_split", gamma_split},
          {"column_subsample", column_subsample},
          {"min_child_weight", min_child_weight}};
}

void GbmParams::Validate() const {
  if (n_rounds < 1) throw InvalidArgument("gbm: n_rounds must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw InvalidArgument("gbm: learning_rate must lie in (0, 1]");
  }
  if (max_depth < 0) throw InvalidArgument("gbm: max_depth must be >= 0 (0 = unlimited)");
  if (!(lambda_l2 >= 0.0)) throw InvalidArgument("gbm: lambda_l2 must be >= 0");
  if (!(gamma_split >= 0.0)) throw InvalidArgument("gbm: gamma_split must be >= 0");
  if (!(column_subsample > 0.0 && column_subsample <= 1.0)) {
    throw InvalidArgument("gbm: column_subsample must lie in (0, 1]");
  }
  if (!(min_child_weight >= 0.0)) throw InvalidArgument("gbm: min_child_weight must be >= 0");
}

ClassVector Softmax(const ClassVector& scores) {
  const double top = *std::max_element(scores.begin(), scores.end());
  ClassVector out;
  double sum = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    out[c] = std::exp(scores[c] - top);
    sum += out[c];
  }
  for (double& v : out) v /= sum;
  return out;
}

void SoftmaxGradientHessian(const ClassVector& scores, int label,
                            ClassVector& gradient, ClassVector& hessian) {
  const ClassVector p = Softmax(scores);
  for (int c = 0; c < kNumClasses; ++c) {
    gradient[c] = p[c] - (c == label ? 1.0 : 0.0);
    hessian[c] = p[c] * (1.0 - p[c]);
  }
}

double SoftmaxCrossEntropy(const ClassVector& scores, int label) {
  const double top = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - top);
  return top + std::log(sum) - scores[label];
}

GradientBoostedModel::GradientBoostedModel(
    std::vector<std::string> feature_names, GbmParams params, std::uint64_t seed,
    ClassVector base_score,
    std::vector<std::array<DecisionTree, kNumClasses>> rounds,
    std::vector<double> training_loss)
    : feature_names_(std::move(feature_names)),
      params_(params),
      seed_(seed),
      base_score_(base_score),
      rounds_(std::move(rounds)),
      training_loss_(std::move(training_loss)) {}

ClassVector GradientBoostedModel::PredictScores(std::span<const double> x) const {
  if (x.size() != feature_names_.size()) {
    throw InvalidArgument(fmt::format(
        "dimension mismatch: gbm has {} features, input has {}",
        feature_names_.size(), x.size()));
  }
  ClassVector scores = base_score_;
  for (const auto& round : rounds_) {
    for (int c = 0; c < kNumClasses; ++c) scores[c] += round[c].PredictValue(x);
  }
  return scores;
}

ClassVector GradientBoostedModel::PredictProba(std::span<const double> x) const {
  return Softmax(PredictScores(x));
}

std::vector<double> GradientBoostedModel::FeatureImportance() const {
  std::vector<double> total(feature_names_.size(), 0.0);
  for (const auto& round : rounds_) {
    for (const auto& tree : round) {
      for (std::size_t j = 0; j < total.size(); ++j) total[j] += tree.feature_importance[j];
    }
  }
  const double sum = std::accumulate(total.begin(), total.end(), 0.0);
  if (sum > 0.0) {
    for (double& v : total) v /= sum;
  }
  return total;
}

std::string GradientBoostedModel::Serialize() const {
  std::string out =
      detail::WriteEnsembleHeader("gbm", feature_names_, seed_, params_.ToParamSet());
  std::vector<std::string> base;
  for (double b : base_score_) base.push_back(FormatExact(b));
  out += "base_score " + JoinStrings(base, ",") + '\n';
  std::vector<std::string> loss;
  for (double l : training_loss_) loss.push_back(FormatExact(l));
  out += "training_loss " + (loss.empty() ? std::string("-") : JoinStrings(loss, ",")) + '\n';
  out += fmt::format("rounds {}\n", rounds_.size());
  for (const auto& round : rounds_) {
    for (const auto& tree : round) tree.Write(out);
  }
  return out;
}

GradientBoostedModel GradientBoostedModel::Parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  detail::EnsembleHeader h = detail::ReadEnsembleHeader(in, "gbm");
  ClassVector base{};
  const auto base_parts = SplitString(detail::NextLine(in, "base_score "), ',');
  if (base_parts.size() != kNumClasses) throw DataError("malformed model file: base_score");
  for (int c = 0; c < kNumClasses; ++c) {
    if (!ParseDouble(base_parts[c], base[c])) throw DataError("malformed model file: base_score");
  }
  std::vector<double> loss;
  const std::string loss_text = detail::NextLine(in, "training_loss ");
  if (loss_text != "-") {
    for (const auto& part : SplitString(loss_text, ',')) {
      double v = 0.0;
      if (!ParseDouble(part, v)) throw DataError("malformed model file: training_loss");
      loss.push_back(v);
    }
  }
  long long n_rounds = 0;
  if (!ParseInt(detail::NextLine(in, "rounds "), n_rounds) || n_rounds < 0) {
    throw DataError("malformed model file: bad round count");
  }
  std::vector<std::array<DecisionTree, kNumClasses>> rounds(n_rounds);
  for (auto& round : rounds) {
    for (auto& tree : round) {
      tree = DecisionTree::Read(in);
      if (tree.n_features() != h.features.size() || tree.kind != TreeKind::kRegression) {
        throw DataError("malformed model file: tree does not match the feature list");
      }
    }
  }
  return GradientBoostedModel(std::move(h.features), GbmParams::FromParamSet(h.params),
                              h.seed, base, std::move(rounds), std::move(loss));
}

GradientBoostedModel FitGradientBoosting(const Dataset& data,
                                         const GbmParams& params,
                                         std::uint64_t seed) {
  params.Validate();
  const std::size_t n = data.n_rows();
  const std::size_t p = data.n_features();

  ClassVector base{};
  const ClassVector counts = ClassCounts(data.labels());
  for (int c = 0; c < kNumClasses; ++c) {
    base[c] = std::log(std::max(counts[c] / static_cast<double>(n), kBaseScoreFloor));
  }

  TreeParams tree_params;
  tree_params.max_depth = params.max_depth;
  tree_params.lambda_l2 = params.lambda_l2;
  tree_params.gamma_split = params.gamma_split;
  tree_params.min_child_weight = params.min_child_weight;
  tree_params.learning_rate = params.learning_rate;
  const std::size_t n_columns = std::clamp<std::size_t>(
      static_cast<std::size_t>(
          std::floor(params.column_subsample * static_cast<double>(p) + 0.5)),
      1, p);

  const SortedColumns sorted(data);
  std::vector<ClassVector> scores(n, base);
  const auto mean_loss = [&] {
    CompensatedSum sum;
    for (std::size_t i = 0; i < n; ++i) sum += SoftmaxCrossEntropy(scores[i], data.label(i));
    return sum.value() / static_cast<double>(n);
  };
  std::vector<double> training_loss{mean_loss()};

  // Per-class gradient/hessian columns for the current round.
  std::vector<std::vector<double>> grad(kNumClasses, std::vector<double>(n));
  std::vector<std::vector<double>> hess(kNumClasses, std::vector<double>(n));
  std::vector<std::array<DecisionTree, kNumClasses>> rounds(params.n_rounds);

  for (int r = 0; r < params.n_rounds; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      ClassVector g, h;
      SoftmaxGradientHessian(scores[i], data.label(i), g, h);
      for (int c = 0; c < kNumClasses; ++c) {
        grad[c][i] = g[c];
        hess[c][i] = h[c];
      }
    }
    ParallelFor(kNumClasses, [&](std::size_t c) {
      const std::uint64_t tree_seed =
          DeriveSeed(seed, "gbm.tree", static_cast<std::uint64_t>(r) * kNumClasses + c);
      std::mt19937_64 rng(tree_seed);
      std::vector<int> columns(p);
      std::iota(columns.begin(), columns.end(), 0);
      if (n_columns < p) {
        for (std::size_t k = 0; k < n_columns; ++k) {
          std::uniform_int_distribution<std::size_t> pick(k, p - 1);
          std::swap(columns[k], columns[pick(rng)]);
        }
        columns.resize(n_columns);
      }
      rounds[r][c] = FitBoostingTree(data, grad[c], hess[c], tree_params, columns,
                                     rng(), &sorted);
    });
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = data.row(i);
      for (int c = 0; c < kNumClasses; ++c) scores[i][c] += rounds[r][c].PredictValue(x);
    }
    training_loss.push_back(mean_loss());
  }
  return GradientBoostedModel(data.schema().names(), params, seed, base,
                              std::move(rounds), std::move(training_loss));
}

}  // namespace hdm
