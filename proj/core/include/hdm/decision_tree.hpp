#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "hdm/common.hpp"
#include "hdm/data_model.hpp"

namespace hdm {

struct TreeNode {
  // -1 marks a leaf.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  // Training weight reaching the node: row multiplicity for classification
  // trees, hessian sum for boosting trees.
  double weight = 0.0;
  // Leaf payloads.
  ClassVector distribution{};
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

enum class TreeKind { kClassification, kRegression };

struct TreeParams {
  // 0 means unlimited.
  int max_depth = 12;
  int min_samples_leaf = 1;
  // Features examined at each split; 0 means all allowed features.
  int features_per_split = 0;
  // Boosting trees only.
  double lambda_l2 = 1.0;
  double gamma_split = 0.0;
  double min_child_weight = 1.0;
  double learning_rate = 1.0;
};

// Binary tree stored breadth-first; rows with x[feature] <= threshold go left.
class DecisionTree {
 public:
  TreeKind kind = TreeKind::kClassification;
  std::vector<TreeNode> nodes;
  int max_depth = 0;
  int min_samples_leaf = 1;
  // Total impurity (Gini) or gain reduction attributed to each feature.
  std::vector<double> feature_importance;

  const TreeNode& Leaf(std::span<const double> x) const;
  int LeafIndex(std::span<const double> x) const;
  ClassVector PredictDistribution(std::span<const double> x) const {
    return Leaf(x).distribution;
  }
  // Argmax of the leaf distribution, lowest class on ties.
  int PredictClass(std::span<const double> x) const {
    return ArgMax(Leaf(x).distribution);
  }
  double PredictValue(std::span<const double> x) const { return Leaf(x).value; }
  int Depth() const;
  std::size_t n_features() const { return feature_importance.size(); }

  void Write(std::string& out) const;
  static DecisionTree Read(std::istream& in);

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

// Row order of every feature column sorted by (value, row index). Built once
// per dataset and shared by all trees fitted on it.
class SortedColumns {
 public:
  explicit SortedColumns(const Dataset& data);
  std::span<const int> order(std::size_t feature) const {
    return {order_.data() + feature * n_rows_, n_rows_};
  }

 private:
  std::size_t n_rows_;
  std::vector<int> order_;
};

// Gini reduction, in weighted-count units, of splitting `total` into `left`
// and total - left.
double GiniGain(const ClassVector& left, const ClassVector& total);

// Second-order regularized split gain.
double BoostingSplitGain(double g_left, double h_left, double g_right,
                         double h_right, double lambda, double gamma);

// CART classification tree with Gini splits. `row_weights` holds each row's
// multiplicity (bootstrap counts; 0 excludes the row). `allowed_features`
// restricts candidate features (empty means all). Feature subsets of size
// params.features_per_split are redrawn at every node from `seed`.
DecisionTree FitClassificationTree(const Dataset& data,
                                   std::span<const double> row_weights,
                                   const TreeParams& params,
                                   std::span<const int> allowed_features,
                                   std::uint64_t seed,
                                   const SortedColumns* presorted = nullptr);

// Regression tree on per-row gradient/hessian statistics with leaf values
// -learning_rate * G / (H + lambda).
DecisionTree FitBoostingTree(const Dataset& data,
                             std::span<const double> gradients,
                             std::span<const double> hessians,
                             const TreeParams& params,
                             std::span<const int> allowed_features,
                             std::uint64_t seed,
                             const SortedColumns* presorted = nullptr);

}  // namespace hdm
