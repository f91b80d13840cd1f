#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "hdm/classifier.hpp"
#include "hdm/decision_tree.hpp"
#include "hdm/gradient_boosting.hpp"
#include "hdm/parallel.hpp"
#include "hdm/random_forest.hpp"

namespace hdm {
namespace {

double TrainingAccuracy(const Classifier& model, const Dataset& data) {
  const std::vector<int> predicted = PredictAll(model, data);
  int correct = 0;
  for (std::size_t i = 0; i < data.n_rows(); ++i) correct += predicted[i] == data.label(i);
  return static_cast<double>(correct) / data.n_rows();
}

double Gini(const std::vector<int>& labels) {
  if (labels.empty()) return 0.0;
  std::array<double, kNumClasses> counts{};
  for (int y : labels) counts[y] += 1;
  double g = 1.0;
  for (double c : counts) g -= (c / labels.size()) * (c / labels.size());
  return g;
}

Dataset RandomDistinctData(std::mt19937_64& rng, std::size_t n, std::size_t p) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> values(n * p);
  for (double& v : values) v = u(rng);
  std::vector<int> labels(n);
  for (int& y : labels) y = static_cast<int>(rng() % kNumClasses);
  return testing::MakeDataset(p, std::move(values), std::move(labels));
}

void CheckTreeInvariants(const DecisionTree& tree, const Dataset& data,
                         const TreeParams& params) {
  if (params.max_depth > 0) {
    EXPECT_LE(tree.Depth(), params.max_depth);
  }
  std::vector<int> rows_per_leaf(tree.nodes.size(), 0);
  for (std::size_t i = 0; i < data.n_rows(); ++i) rows_per_leaf[tree.LeafIndex(data.row(i))]++;
  for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
    const TreeNode& node = tree.nodes[k];
    if (!node.is_leaf()) continue;
    double sum = 0.0;
    for (double v : node.distribution) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_GE(rows_per_leaf[k], params.min_samples_leaf);
  }
}

TEST(TreeTest, PureNodeIsOneHotLeaf) {
  const Dataset d = testing::MakeDataset(1, {1, 2, 3}, {4, 4, 4});
  const std::vector<double> w(3, 1.0);
  const DecisionTree tree = FitClassificationTree(d, w, {}, {}, 1);
  ASSERT_EQ(tree.nodes.size(), 1u);
  EXPECT_TRUE(tree.nodes[0].is_leaf());
  EXPECT_EQ(tree.nodes[0].distribution, (ClassVector{0, 0, 0, 0, 1, 0}));
}

TEST(TreeTest, RootSplitMatchesBruteForce) {
  const std::vector<double> x = {1, 2, 3, 4};
  const std::vector<int> y = {0, 0, 1, 1};
  double best_gain = -1.0;
  double best_threshold = 0.0;
  for (std::size_t cut = 1; cut < x.size(); ++cut) {
    const std::vector<int> left(y.begin(), y.begin() + cut);
    const std::vector<int> right(y.begin() + cut, y.end());
    const double gain = Gini(y) - (left.size() * Gini(left) + right.size() * Gini(right)) / 4.0;
    if (gain > best_gain) {
      best_gain = gain;
      best_threshold = 0.5 * (x[cut - 1] + x[cut]);
    }
  }
  const Dataset d = testing::MakeDataset(1, x, y);
  const std::vector<double> w(4, 1.0);
  const DecisionTree tree = FitClassificationTree(d, w, {}, {}, 1);
  ASSERT_FALSE(tree.nodes[0].is_leaf());
  EXPECT_EQ(tree.nodes[0].threshold, best_threshold);
  EXPECT_EQ(best_threshold, 2.5);
}

TEST(TreeTest, GiniGainAgreesWithDefinition) {
  const ClassVector total = {2, 2, 0, 0, 0, 0};
  const ClassVector left = {2, 0, 0, 0, 0, 0};
  // 4 * (0.5 - 0) in weighted-count units.
  EXPECT_NEAR(GiniGain(left, total), 2.0, 1e-15);
}

TEST(TreeTest, BalancedBoostingGainIsZero) {
  for (double g : {-3.0, 0.5, 2.0}) {
    for (double h : {0.1, 1.0, 5.0}) {
      EXPECT_NEAR(BoostingSplitGain(g, h, g, h, 0.0, 0.0), 0.0, 1e-12);
    }
  }
  const double gl = 1.0, hl = 2.0, gr = -3.0, hr = 1.5, lambda = 1.0, gamma = 0.2;
  const double expected = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) -
                                 (gl + gr) * (gl + gr) / (hl + hr + lambda)) -
                          gamma;
  EXPECT_NEAR(BoostingSplitGain(gl, hl, gr, hr, lambda, gamma), expected, 1e-15);
}

TEST(TreeTest, InvariantsOnRandomData) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Dataset d = RandomDistinctData(rng, 200, 3);
    TreeParams params;
    params.max_depth = 1 + static_cast<int>(rng() % 6);
    params.min_samples_leaf = 1 + static_cast<int>(rng() % 10);
    const std::vector<double> w(d.n_rows(), 1.0);
    CheckTreeInvariants(FitClassificationTree(d, w, params, {}, rng()), d, params);
  }
}

TEST(TreeTest, UnlimitedDepthFitsTrainingDataExactly) {
  std::mt19937_64 rng(2);
  const Dataset d = RandomDistinctData(rng, 300, 2);
  TreeParams params;
  params.max_depth = 0;
  params.min_samples_leaf = 1;
  const std::vector<double> w(d.n_rows(), 1.0);
  const DecisionTree tree = FitClassificationTree(d, w, params, {}, 5);
  for (std::size_t i = 0; i < d.n_rows(); ++i) EXPECT_EQ(tree.PredictClass(d.row(i)), d.label(i));
}

TEST(TreeTest, SerializationRoundTrip) {
  std::mt19937_64 rng(3);
  const Dataset d = RandomDistinctData(rng, 100, 2);
  const std::vector<double> w(d.n_rows(), 1.0);
  const DecisionTree tree = FitClassificationTree(d, w, {}, {}, 5);
  std::string text;
  tree.Write(text);
  std::istringstream in(text);
  EXPECT_EQ(DecisionTree::Read(in), tree);
}

TEST(ForestTest, MajorityVote) {
  const int a[] = {2, 2, 3};
  const int b[] = {1, 2};
  const int c[] = {4};
  EXPECT_EQ(MajorityVote(a), 2);
  EXPECT_EQ(MajorityVote(b), 1);
  EXPECT_EQ(MajorityVote(c), 4);
}

TEST(ForestTest, SingleTreeWithoutResamplingEqualsTree) {
  std::mt19937_64 rng(4);
  const Dataset d = RandomDistinctData(rng, 250, 3);
  RandomForestParams params;
  params.n_trees = 1;
  params.bootstrap = false;
  params.features_per_split = 3;
  params.max_depth = 6;
  params.min_samples_leaf = 3;
  const RandomForestModel forest = FitRandomForest(d, params, 7);
  TreeParams tree_params;
  tree_params.max_depth = 6;
  tree_params.min_samples_leaf = 3;
  tree_params.features_per_split = 3;
  const std::vector<double> w(d.n_rows(), 1.0);
  const DecisionTree tree = FitClassificationTree(d, w, tree_params, {}, 12345);
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    EXPECT_EQ(forest.Predict(d.row(i)), tree.PredictClass(d.row(i)));
  }
  EXPECT_EQ(forest.trees().front().nodes, tree.nodes);
}

TEST(ForestTest, DeterministicAndSerializable) {
  std::mt19937_64 rng(5);
  const Dataset d = RandomDistinctData(rng, 200, 4);
  RandomForestParams params;
  params.n_trees = 20;
  const RandomForestModel a = FitRandomForest(d, params, 11);
  const RandomForestModel b = FitRandomForest(d, params, 11);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.Serialize(), b.Serialize());
  EXPECT_EQ(RandomForestModel::Parse(a.Serialize()), a);
  EXPECT_NE(FitRandomForest(d, params, 12).Serialize(), a.Serialize());
}

TEST(ForestTest, VoteSharesSumToOne) {
  std::mt19937_64 rng(6);
  const Dataset d = RandomDistinctData(rng, 150, 2);
  RandomForestParams params;
  params.n_trees = 15;
  const RandomForestModel forest = FitRandomForest(d, params, 1);
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    const ClassVector shares = forest.PredictProba(d.row(i));
    double sum = 0.0;
    for (double s : shares) sum += s;
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  EXPECT_FALSE(forest.has_probabilities());
}

TEST(ForestTest, BlobsTrainingAccuracy) {
  const Dataset d = testing::Blobs(500, 2, 8);
  RandomForestParams params;
  params.n_trees = 50;
  EXPECT_GE(TrainingAccuracy(FitRandomForest(d, params, 3), d), 0.98);
}

TEST(ForestTest, InvalidParams) {
  RandomForestParams params;
  params.n_trees = 0;
  EXPECT_THROW(params.Validate(3), InvalidArgument);
  params = {};
  params.features_per_split = 4;
  EXPECT_THROW(params.Validate(3), InvalidArgument);
  EXPECT_THROW(RandomForestParams::FromParamSet({{"n_tress", 3}}), InvalidArgument);
  EXPECT_THROW(RandomForestParams::FromParamSet({{"n_trees", 3.5}}), InvalidArgument);
}

TEST(SoftmaxTest, UniformGradientAndHessian) {
  ClassVector g, h;
  SoftmaxGradientHessian(ClassVector{}, 0, g, h);
  EXPECT_NEAR(g[0], -5.0 / 6.0, 1e-15);
  for (int c = 1; c < kNumClasses; ++c) EXPECT_NEAR(g[c], 1.0 / 6.0, 1e-15);
  for (double v : h) EXPECT_NEAR(v, 5.0 / 36.0, 1e-15);
}

TEST(SoftmaxTest, DerivativesMatchFiniteDifferences) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    ClassVector s;
    for (double& v : s) v = z(rng);
    const int y = static_cast<int>(rng() % kNumClasses);
    ClassVector g, h;
    SoftmaxGradientHessian(s, y, g, h);
    const double eps = 1e-4;
    for (int c = 0; c < kNumClasses; ++c) {
      ClassVector plus = s, minus = s;
      plus[c] += eps;
      minus[c] -= eps;
      const double lp = SoftmaxCrossEntropy(plus, y);
      const double lm = SoftmaxCrossEntropy(minus, y);
      const double l0 = SoftmaxCrossEntropy(s, y);
      EXPECT_NEAR(g[c], (lp - lm) / (2 * eps), 1e-6);
      EXPECT_NEAR(h[c], (lp - 2 * l0 + lm) / (eps * eps), 1e-6);
    }
  }
}

TEST(SoftmaxTest, SymmetryAndShiftInvariance) {
  for (double v : Softmax({3, 3, 3, 3, 3, 3})) EXPECT_NEAR(v, 1.0 / 6.0, 1e-15);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    ClassVector s;
    for (double& v : s) v = z(rng);
    ClassVector shifted = s;
    const double c = 50.0 * z(rng);
    for (double& v : shifted) v += c;
    const ClassVector a = Softmax(s);
    const ClassVector b = Softmax(shifted);
    for (int k = 0; k < kNumClasses; ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
  }
}

TEST(GbmTest, BaseScoreOnlyReproducesTrainingShares) {
  std::mt19937_64 rng(9);
  const Dataset d = RandomDistinctData(rng, 240, 2);
  GbmParams params;
  params.n_rounds = 1;
  const GradientBoostedModel fitted = FitGradientBoosting(d, params, 1);
  const GradientBoostedModel base_only(d.schema().names(), params, 1, fitted.base_score(), {},
                                       {});
  const ClassVector counts = ClassCounts(d.labels());
  const double x[] = {0.5, 0.5};
  const ClassVector probs = base_only.PredictProba(x);
  for (int c = 0; c < kNumClasses; ++c) EXPECT_NEAR(probs[c], counts[c] / 240.0, 1e-12);
}

TEST(GbmTest, TrainingLossNonincreasing) {
  std::mt19937_64 rng(10);
  for (double lr : {0.05, 0.3}) {
    const Dataset d = RandomDistinctData(rng, 300, 3);
    GbmParams params;
    params.n_rounds = 40;
    params.learning_rate = lr;
    params.lambda_l2 = 1.0;
    const GradientBoostedModel model = FitGradientBoosting(d, params, 2);
    const auto& loss = model.training_loss();
    ASSERT_EQ(loss.size(), 41u);
    for (std::size_t r = 1; r < loss.size(); ++r) EXPECT_LE(loss[r], loss[r - 1] + 1e-12);
  }
}

TEST(GbmTest, ProbabilitiesSumToOne) {
  std::mt19937_64 rng(11);
  const Dataset d = RandomDistinctData(rng, 200, 3);
  GbmParams params;
  params.n_rounds = 10;
  const GradientBoostedModel model = FitGradientBoosting(d, params, 3);
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    const ClassVector p = model.PredictProba(d.row(i));
    double sum = 0.0;
    for (double v : p) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-10);
  }
  const double wrong[] = {1.0};
  EXPECT_THROW(model.PredictProba(wrong), InvalidArgument);
}

TEST(GbmTest, BlobsTrainingAccuracy) {
  const Dataset d = testing::Blobs(500, 2, 12);
  GbmParams params;
  params.n_rounds = 100;
  params.max_depth = 3;
  EXPECT_GE(TrainingAccuracy(FitGradientBoosting(d, params, 4), d), 0.98);
}

TEST(GbmTest, DeterministicAcrossThreadCounts) {
  std::mt19937_64 rng(13);
  const Dataset d = RandomDistinctData(rng, 200, 4);
  GbmParams params;
  params.n_rounds = 15;
  params.column_subsample = 0.5;
  SetNumThreads(1);
  const GradientBoostedModel serial = FitGradientBoosting(d, params, 5);
  SetNumThreads(4);
  const GradientBoostedModel parallel = FitGradientBoosting(d, params, 5);
  SetNumThreads(0);
  EXPECT_EQ(serial, parallel);
  EXPECT_EQ(GradientBoostedModel::Parse(serial.Serialize()), serial);
}

TEST(GbmTest, InvalidParams) {
  GbmParams params;
  params.n_rounds = 0;
  EXPECT_THROW(params.Validate(), InvalidArgument);
  params = {};
  params.learning_rate = 1.5;
  EXPECT_THROW(params.Validate(), InvalidArgument);
  params = {};
  params.column_subsample = 0.0;
  EXPECT_THROW(params.Validate(), InvalidArgument);
}

TEST(ClassifierTest, ParseDispatchesOnHeader) {
  const Dataset d = testing::Blobs(100, 2, 14);
  for (ModelFamily family : {ModelFamily::kOrderedProbit, ModelFamily::kRandomForest,
                             ModelFamily::kGradientBoosting}) {
    const ParamSet params = family == ModelFamily::kRandomForest
                                ? ParamSet{{"n_trees", 5}}
                                : family == ModelFamily::kGradientBoosting
                                      ? ParamSet{{"n_rounds", 5}}
                                      : ParamSet{};
    const auto model = FitClassifier(family, params, d, 1);
    const auto back = ParseClassifier(model->Serialize());
    EXPECT_EQ(back->family(), family);
    EXPECT_EQ(back->Serialize(), model->Serialize());
    EXPECT_EQ(PredictAll(*back, d), PredictAll(*model, d));
  }
  EXPECT_EQ(ParseModelFamily("random_forest"), ModelFamily::kRandomForest);
  EXPECT_THROW(ParseModelFamily("svm"), InvalidArgument);
}

}  // namespace
}  // namespace hdm
