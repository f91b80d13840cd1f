#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hdm/classifier.hpp"
#include "hdm/decision_tree.hpp"

namespace hdm {

struct RandomForestParams {
  int n_trees = 200;
  int max_depth = 12;
  int min_samples_leaf = 5;
  // 0 selects ceil(sqrt(p)).
  int features_per_split = 0;
  double bootstrap_fraction = 1.0;
  // When false every tree sees each row exactly once.
  bool bootstrap = true;

  // Keys: n_trees, max_depth, min_samples_leaf, features_per_split,
  // bootstrap_fraction, bootstrap (0/1).
  static RandomForestParams FromParamSet(const ParamSet& params);
  ParamSet ToParamSet() const;
  void Validate(std::size_t n_features) const;

  friend bool operator==(const RandomForestParams&, const RandomForestParams&) = default;
};

class RandomForestModel : public Classifier {
 public:
  RandomForestModel() = default;
  RandomForestModel(std::vector<std::string> feature_names,
                    RandomForestParams params, std::uint64_t seed,
                    std::vector<DecisionTree> trees);

  ModelFamily family() const override { return ModelFamily::kRandomForest; }
  const std::vector<std::string>& feature_names() const override {
    return feature_names_;
  }
  // Share of trees voting for each class; each tree votes its leaf argmax.
  ClassVector PredictProba(std::span<const double> x) const override;
  bool has_probabilities() const override { return false; }
  // Summed per-tree impurity reductions, normalized to sum to 1.
  std::vector<double> FeatureImportance() const override;
  std::string Serialize() const override;

  static RandomForestModel Parse(std::string_view text);

  const std::vector<DecisionTree>& trees() const { return trees_; }
  const RandomForestParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }

  friend bool operator==(const RandomForestModel& a, const RandomForestModel& b) {
    return a.feature_names_ == b.feature_names_ && a.params_ == b.params_ &&
           a.seed_ == b.seed_ && a.trees_ == b.trees_;
  }

 private:
  std::vector<std::string> feature_names_;
  RandomForestParams params_;
  std::uint64_t seed_ = 0;
  std::vector<DecisionTree> trees_;
};

// Bagged Gini trees. Tree t draws its bootstrap sample and split features from
// DeriveSeed(seed, "forest.tree", t), so the result does not depend on how
// trees are scheduled across threads.
RandomForestModel FitRandomForest(const Dataset& data,
                                  const RandomForestParams& params,
                                  std::uint64_t seed);

// Majority vote with ties going to the lowest class.
int MajorityVote(std::span<const int> votes);

}  // namespace hdm
