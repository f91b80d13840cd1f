#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hdm/classifier.hpp"
#include "hdm/decision_tree.hpp"

namespace hdm {

struct GbmParams {
  int n_rounds = 200;
  double learning_rate = 0.1;
  int max_depth = 4;
  double lambda_l2 = 1.0;
  double gamma_split = 0.0;
  double column_subsample = 0.8;
  double min_child_weight = 1.0;

  // Keys match the field names.
  static GbmParams FromParamSet(const ParamSet& params);
  ParamSet ToParamSet() const;
  void Validate() const;

  friend bool operator==(const GbmParams&, const GbmParams&) = default;
};

ClassVector Softmax(const ClassVector& scores);

// Softmax cross-entropy derivatives with respect to the class scores:
// g_c = p_c - 1{y = c}, h_c = p_c (1 - p_c).
void SoftmaxGradientHessian(const ClassVector& scores, int label,
                            ClassVector& gradient, ClassVector& hessian);
double SoftmaxCrossEntropy(const ClassVector& scores, int label);

class GradientBoostedModel : public Classifier {
 public:
  GradientBoostedModel() = default;
  GradientBoostedModel(std::vector<std::string> feature_names, GbmParams params,
                       std::uint64_t seed, ClassVector base_score,
                       std::vector<std::array<DecisionTree, kNumClasses>> rounds,
                       std::vector<double> training_loss);

  ModelFamily family() const override { return ModelFamily::kGradientBoosting; }
  const std::vector<std::string>& feature_names() const override {
    return feature_names_;
  }
  ClassVector PredictScores(std::span<const double> x) const;
  ClassVector PredictProba(std::span<const double> x) const override;
  // Summed split gains, normalized to sum to 1.
  std::vector<double> FeatureImportance() const override;
  std::string Serialize() const override;

  static GradientBoostedModel Parse(std::string_view text);

  const ClassVector& base_score() const { return base_score_; }
  const std::vector<std::array<DecisionTree, kNumClasses>>& rounds() const {
    return rounds_;
  }
  const GbmParams& params() const { return params_; }
  // Mean training cross-entropy before any round, then after each round.
  const std::vector<double>& training_loss() const { return training_loss_; }

  friend bool operator==(const GradientBoostedModel& a, const GradientBoostedModel& b) {
    return a.feature_names_ == b.feature_names_ && a.params_ == b.params_ &&
           a.seed_ == b.seed_ && a.base_score_ == b.base_score_ && a.rounds_ == b.rounds_ &&
           a.training_loss_ == b.training_loss_;
  }

 private:
  std::vector<std::string> feature_names_;
  GbmParams params_;
  std::uint64_t seed_ = 0;
  ClassVector base_score_{};
  std::vector<std::array<DecisionTree, kNumClasses>> rounds_;
  std::vector<double> training_loss_;
};

// Multiclass boosting with one regularized tree per class per round. The
// base score is the log of the training class frequencies (floored at 1e-6).
// Each tree sees round(column_subsample * p) features (at least one) drawn
// from DeriveSeed(seed, "gbm.tree", round * 6 + class).
GradientBoostedModel FitGradientBoosting(const Dataset& data,
                                         const GbmParams& params,
                                         std::uint64_t seed);

}  // namespace hdm
