#include "hdm/random_forest.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "ensemble_io.hpp"
#include "hdm/parallel.hpp"
#include "hdm/text_io.hpp"

namespace hdm {

namespace {
constexpr std::string_view kForestKeys[] = {
    "n_trees", "max_depth", "min_samples_leaf", "features_per_split",
    "bootstrap_fraction", "bootstrap"};
}  // namespace

RandomForestParams RandomForestParams::FromParamSet(const ParamSet& params) {
  RejectUnknownParams(params, kForestKeys, "forest");
  RandomForestParams out;
  out.n_trees = ParamInt(params, "n_trees", out.n_trees);
  out.max_depth = ParamInt(params, "max_depth", out.max_depth);
  out.min_samples_leaf = ParamInt(params, "min_samples_leaf", out.min_samples_leaf);
  out.features_per_split = ParamInt(params, "features_per_split", out.features_per_split);
  out.bootstrap_fraction = ParamDouble(params, "bootstrap_fraction", out.bootstrap_fraction);
  out.bootstrap = ParamInt(params, "bootstrap", out.bootstrap ? 1 : 0) != 0;
  return out;
}

ParamSet RandomForestParams::ToParamSet() const {
  return {{"n_trees", n_trees},
          {"max_depth", max_depth},
          {"min_samples_leaf", min_samples_leaf},
          {"features_per_split", features_per_split},
          {"bootstrap_fraction", bootstrap_fraction},
          {"bootstrap", bootstrap ? 1.0 : 0.0}};
}

void RandomForestParams::Validate(std::size_t n_features) const {
  if (n_trees < 1) throw InvalidArgument("forest: n_trees must be >= 1");
  if (max_depth < 0) throw InvalidArgument("forest: max_depth must be >= 0 (0 = unlimited)");
  if (min_samples_leaf < 1) throw InvalidArgument("forest: min_samples_leaf must be >= 1");
  if (features_per_split < 0 ||
      static_cast<std::size_t>(features_per_split) > n_features) {
    throw InvalidArgument(fmt::format(
        "forest: features_per_split must lie in [1, p = {}] (0 = ceil(sqrt(p)))",
        n_features));
  }
  if (!(bootstrap_fraction > 0.0 && bootstrap_fraction <= 1.0)) {
    throw InvalidArgument("forest: bootstrap_fraction must lie in (0, 1]");
  }
}

RandomForestModel::RandomForestModel(std::vector<std::string> feature_names,
                                     RandomForestParams params,
                                     std::uint64_t seed,
                                     std::vector<DecisionTree> trees)
    : feature_names_(std::move(feature_names)),
      params_(params),
      seed_(seed),
      trees_(std::move(trees)) {}

int MajorityVote(std::span<const int> votes) {
  if (votes.empty()) throw InvalidArgument("no votes");
  std::array<int, kNumClasses> tally{};
  for (int v : votes) {
    if (!IsValidLabel(v)) throw InvalidArgument("vote outside 0..5");
    ++tally[v];
  }
  return static_cast<int>(std::max_element(tally.begin(), tally.end()) - tally.begin());
}

ClassVector RandomForestModel::PredictProba(std::span<const double> x) const {
  if (x.size() != feature_names_.size()) {
    throw InvalidArgument(fmt::format(
        "dimension mismatch: forest has {} features, input has {}",
        feature_names_.size(), x.size()));
  }
  ClassVector votes{};
  for (const auto& tree : trees_) votes[tree.PredictClass(x)] += 1.0;
  const double n = static_cast<double>(trees_.size());
  for (double& v : votes) v /= n;
  return votes;
}

std::vector<double> RandomForestModel::FeatureImportance() const {
  std::vector<double> total(feature_names_.size(), 0.0);
  for (const auto& tree : trees_) {
    for (std::size_t j = 0; j < total.size(); ++j) total[j] += tree.feature_importance[j];
  }
  double sum = 0.0;
  for (double v : total) sum += v;
  if (sum > 0.0) {
    for (double& v : total) v /= sum;
  }
  return total;
}

std::string RandomForestModel::Serialize() const {
  std::string out = detail::WriteEnsembleHeader("forest", feature_names_, seed_,
                                                params_.ToParamSet());
  out += fmt::format("trees {}\n", trees_.size());
  for (const auto& tree : trees_) tree.Write(out);
  return out;
}

RandomForestModel RandomForestModel::Parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  detail::EnsembleHeader h = detail::ReadEnsembleHeader(in, "forest");
  long long n_trees = 0;
  if (!ParseInt(detail::NextLine(in, "trees "), n_trees) || n_trees < 1) {
    throw DataError("malformed model file: bad tree count");
  }
  std::vector<DecisionTree> trees;
  for (long long t = 0; t < n_trees; ++t) {
    trees.push_back(DecisionTree::Read(in));
    if (trees.back().n_features() != h.features.size() ||
        trees.back().kind != TreeKind::kClassification) {
      throw DataError("malformed model file: tree does not match the feature list");
    }
  }
  return RandomForestModel(std::move(h.features),
                           RandomForestParams::FromParamSet(h.params), h.seed,
                           std::move(trees));
}

RandomForestModel FitRandomForest(const Dataset& data,
                                  const RandomForestParams& params,
                                  std::uint64_t seed) {
  const std::size_t p = data.n_features();
  params.Validate(p);
  TreeParams tree_params;
  tree_params.max_depth = params.max_depth;
  tree_params.min_samples_leaf = params.min_samples_leaf;
  tree_params.features_per_split =
      params.features_per_split > 0
          ? params.features_per_split
          : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p))));

  const SortedColumns sorted(data);
  const std::size_t n = data.n_rows();
  const auto sample_size = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::floor(params.bootstrap_fraction * static_cast<double>(n) + 0.5)));

  std::vector<DecisionTree> trees(params.n_trees);
  ParallelFor(trees.size(), [&](std::size_t t) {
    std::mt19937_64 rng(DeriveSeed(seed, "forest.tree", t));
    std::vector<double> weights(n, params.bootstrap ? 0.0 : 1.0);
    if (params.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (std::size_t k = 0; k < sample_size; ++k) weights[pick(rng)] += 1.0;
    }
    trees[t] = FitClassificationTree(data, weights, tree_params, {}, rng(), &sorted);
  });
  return RandomForestModel(data.schema().names(), params, seed, std::move(trees));
}

}  // namespace hdm
