#include "hdm/decision_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "hdm/text_io.hpp"

namespace hdm {

// ---------------------------------------------------------------------------
// Split criteria

double GiniGain(const ClassVector& left, const ClassVector& total) {
  double n = 0.0, n_left = 0.0, sq = 0.0, sq_left = 0.0, sq_right = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    const double right = total[c] - left[c];
    n += total[c];
    n_left += left[c];
    sq += total[c] * total[c];
    sq_left += left[c] * left[c];
    sq_right += right * right;
  }
  const double n_right = n - n_left;
  if (n <= 0.0 || n_left <= 0.0 || n_right <= 0.0) return 0.0;
  // n * Gini(n) = n - sum c^2 / n
  return sq_left / n_left + sq_right / n_right - sq / n;
}

double BoostingSplitGain(double g_left, double h_left, double g_right,
                         double h_right, double lambda, double gamma) {
  const double g = g_left + g_right;
  const double h = h_left + h_right;
  return 0.5 * (g_left * g_left / (h_left + lambda) +
                g_right * g_right / (h_right + lambda) - g * g / (h + lambda)) -
         gamma;
}

// ---------------------------------------------------------------------------
// SortedColumns

SortedColumns::SortedColumns(const Dataset& data)
    : n_rows_(data.n_rows()), order_(data.n_rows() * data.n_features()) {
  std::vector<int> idx(n_rows_);
  for (std::size_t j = 0; j < data.n_features(); ++j) {
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      return data.value(a, j) < data.value(b, j);
    });
    std::copy(idx.begin(), idx.end(), order_.begin() + j * n_rows_);
  }
}

namespace {

// ---------------------------------------------------------------------------
// Level-wise builder. Each level scans every feature's presorted row order
// once, updating running left-side statistics for all open nodes at that
// level, so the cost per level is O(n * p) regardless of node count.

struct ClassificationPolicy {
  using Stats = ClassVector;
  const Dataset& data;
  std::span<const double> weights;
  const TreeParams& params;

  static constexpr TreeKind kKind = TreeKind::kClassification;

  bool Active(std::size_t i) const { return weights[i] > 0.0; }
  void Add(Stats& s, std::size_t i) const { s[data.label(i)] += weights[i]; }
  static Stats Subtract(const Stats& total, const Stats& left) {
    Stats out;
    for (int c = 0; c < kNumClasses; ++c) out[c] = total[c] - left[c];
    return out;
  }
  static double Weight(const Stats& s) {
    return std::accumulate(s.begin(), s.end(), 0.0);
  }
  bool CanSplit(const Stats& s) const {
    const double w = Weight(s);
    const double top = *std::max_element(s.begin(), s.end());
    return top < w && w >= 2.0 * params.min_samples_leaf;
  }
  bool ChildrenOk(const Stats& left, const Stats& right) const {
    return Weight(left) >= params.min_samples_leaf &&
           Weight(right) >= params.min_samples_leaf;
  }
  double Gain(const Stats& left, const Stats& total) const {
    return GiniGain(left, total);
  }
  double MinGain(const Stats& total) const { return 1e-12 * Weight(total); }
  void MakeLeaf(TreeNode& node, const Stats& s) const {
    const double w = Weight(s);
    node.weight = w;
    for (int c = 0; c < kNumClasses; ++c) node.distribution[c] = w > 0.0 ? s[c] / w : 0.0;
  }
};

struct GradStats {
  double g = 0.0;
  double h = 0.0;
};

struct BoostingPolicy {
  using Stats = GradStats;
  std::span<const double> gradients;
  std::span<const double> hessians;
  const TreeParams& params;

  static constexpr TreeKind kKind = TreeKind::kRegression;

  bool Active(std::size_t) const { return true; }
  void Add(Stats& s, std::size_t i) const {
    s.g += gradients[i];
    s.h += hessians[i];
  }
  static Stats Subtract(const Stats& total, const Stats& left) {
    return {total.g - left.g, total.h - left.h};
  }
  static double Weight(const Stats& s) { return s.h; }
  bool CanSplit(const Stats& s) const {
    return s.h >= 2.0 * params.min_child_weight;
  }
  bool ChildrenOk(const Stats& left, const Stats& right) const {
    return left.h >= params.min_child_weight && right.h >= params.min_child_weight;
  }
  double Gain(const Stats& left, const Stats& total) const {
    const Stats right = Subtract(total, left);
    return BoostingSplitGain(left.g, left.h, right.g, right.h, params.lambda_l2,
                             params.gamma_split);
  }
  double MinGain(const Stats&) const { return 1e-14; }
  void MakeLeaf(TreeNode& node, const Stats& s) const {
    node.weight = s.h;
    node.value = -params.learning_rate * s.g / (s.h + params.lambda_l2);
  }
};

template <typename Policy>
DecisionTree BuildTree(const Dataset& data, const Policy& policy,
                       const TreeParams& params,
                       std::span<const int> allowed_features, std::uint64_t seed,
                       const SortedColumns* presorted) {
  using Stats = typename Policy::Stats;
  const std::size_t n = data.n_rows();
  const std::size_t p = data.n_features();

  std::optional<SortedColumns> local_sorted;
  if (presorted == nullptr) {
    local_sorted.emplace(data);
    presorted = &*local_sorted;
  }

  std::vector<int> allowed(allowed_features.begin(), allowed_features.end());
  if (allowed.empty()) {
    allowed.resize(p);
    std::iota(allowed.begin(), allowed.end(), 0);
  }
  std::sort(allowed.begin(), allowed.end());
  for (int f : allowed) {
    if (f < 0 || static_cast<std::size_t>(f) >= p) {
      throw InvalidArgument("allowed feature index out of range");
    }
  }
  const std::size_t per_split =
      params.features_per_split <= 0
          ? allowed.size()
          : std::min<std::size_t>(params.features_per_split, allowed.size());

  std::mt19937_64 rng(seed);

  DecisionTree tree;
  tree.kind = Policy::kKind;
  tree.max_depth = params.max_depth;
  tree.min_samples_leaf = params.min_samples_leaf;
  tree.feature_importance.assign(p, 0.0);

  std::vector<int> row_node(n, -1);
  std::vector<Stats> node_stats(1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!policy.Active(i)) continue;
    row_node[i] = 0;
    policy.Add(node_stats[0], i);
  }
  tree.nodes.emplace_back();

  std::vector<int> frontier{0};
  for (int depth = 0; !frontier.empty(); ++depth) {
    const std::size_t m = frontier.size();
    std::vector<int> local_of_node(tree.nodes.size(), -1);
    // candidate[l * p + f] marks feature f as eligible at local node l.
    std::vector<char> candidate(m * p, 0);
    const bool depth_ok = params.max_depth <= 0 || depth < params.max_depth;
    std::vector<int> draw = allowed;
    for (std::size_t l = 0; l < m; ++l) {
      const int id = frontier[l];
      if (!depth_ok || !policy.CanSplit(node_stats[id])) continue;
      local_of_node[id] = static_cast<int>(l);
      if (per_split == allowed.size()) {
        for (int f : allowed) candidate[l * p + f] = 1;
      } else {
        // Partial Fisher-Yates over the allowed features.
        for (std::size_t k = 0; k < per_split; ++k) {
          std::uniform_int_distribution<std::size_t> pick(k, draw.size() - 1);
          std::swap(draw[k], draw[pick(rng)]);
          candidate[l * p + draw[k]] = 1;
        }
      }
    }

    struct Best {
      double gain = 0.0;
      int feature = -1;
      double threshold = 0.0;
    };
    std::vector<Best> best(m);
    std::vector<Stats> left(m);
    std::vector<double> last(m);
    std::vector<char> has_last(m);

    for (int f : allowed) {
      std::fill(left.begin(), left.end(), Stats{});
      std::fill(has_last.begin(), has_last.end(), 0);
      for (int i : presorted->order(f)) {
        const int id = row_node[i];
        if (id < 0) continue;
        const int l = local_of_node[id];
        if (l < 0 || !candidate[static_cast<std::size_t>(l) * p + f]) continue;
        const double v = data.value(i, f);
        if (has_last[l] && v > last[l]) {
          const Stats& total = node_stats[id];
          const Stats right = Policy::Subtract(total, left[l]);
          if (policy.ChildrenOk(left[l], right)) {
            const double gain = policy.Gain(left[l], total);
            Best& b = best[l];
            const double margin = 1e-12 * std::max(1.0, std::abs(b.gain));
            if (gain > policy.MinGain(total) &&
                (b.feature < 0 || gain > b.gain + margin)) {
              double threshold = 0.5 * (last[l] + v);
              if (!(threshold < v)) threshold = last[l];
              b = {gain, f, threshold};
            }
          }
        }
        policy.Add(left[l], i);
        last[l] = v;
        has_last[l] = 1;
      }
    }

    std::vector<int> next;
    for (std::size_t l = 0; l < m; ++l) {
      const int id = frontier[l];
      if (best[l].feature < 0) {
        policy.MakeLeaf(tree.nodes[id], node_stats[id]);
        continue;
      }
      TreeNode& node = tree.nodes[id];
      node.feature = best[l].feature;
      node.threshold = best[l].threshold;
      node.weight = Policy::Weight(node_stats[id]);
      node.left = static_cast<int>(tree.nodes.size());
      node.right = node.left + 1;
      tree.feature_importance[node.feature] += best[l].gain;
      next.push_back(node.left);
      next.push_back(node.right);
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
    }
    if (next.empty()) break;

    node_stats.resize(tree.nodes.size());
    for (int id : next) node_stats[id] = Stats{};
    for (std::size_t i = 0; i < n; ++i) {
      const int id = row_node[i];
      if (id < 0) continue;
      const TreeNode& node = tree.nodes[id];
      if (node.is_leaf()) {
        row_node[i] = -1;
        continue;
      }
      const int child =
          data.value(i, node.feature) <= node.threshold ? node.left : node.right;
      row_node[i] = child;
      policy.Add(node_stats[child], i);
    }
    frontier = std::move(next);
  }
  return tree;
}

}  // namespace

DecisionTree FitClassificationTree(const Dataset& data,
                                   std::span<const double> row_weights,
                                   const TreeParams& params,
                                   std::span<const int> allowed_features,
                                   std::uint64_t seed,
                                   const SortedColumns* presorted) {
  if (row_weights.size() != data.n_rows()) {
    throw InvalidArgument("row weight count does not match the dataset");
  }
  if (params.min_samples_leaf < 1) throw InvalidArgument("min_samples_leaf must be >= 1");
  if (params.features_per_split < 0) throw InvalidArgument("features_per_split must be >= 0");
  ClassificationPolicy policy{data, row_weights, params};
  return BuildTree(data, policy, params, allowed_features, seed, presorted);
}

DecisionTree FitBoostingTree(const Dataset& data,
                             std::span<const double> gradients,
                             std::span<const double> hessians,
                             const TreeParams& params,
                             std::span<const int> allowed_features,
                             std::uint64_t seed,
                             const SortedColumns* presorted) {
  if (gradients.size() != data.n_rows() || hessians.size() != data.n_rows()) {
    throw InvalidArgument("gradient/hessian count does not match the dataset");
  }
  if (params.lambda_l2 < 0.0 || params.gamma_split < 0.0 ||
      params.min_child_weight < 0.0) {
    throw InvalidArgument("boosting regularization parameters must be >= 0");
  }
  BoostingPolicy policy{gradients, hessians, params};
  return BuildTree(data, policy, params, allowed_features, seed, presorted);
}

// ---------------------------------------------------------------------------
// DecisionTree

int DecisionTree::LeafIndex(std::span<const double> x) const {
  if (x.size() != n_features()) {
    throw InvalidArgument(fmt::format(
        "dimension mismatch: tree has {} features, input has {}", n_features(),
        x.size()));
  }
  int id = 0;
  while (!nodes[id].is_leaf()) {
    const TreeNode& node = nodes[id];
    id = x[node.feature] <= node.threshold ? node.left : node.right;
  }
  return id;
}

const TreeNode& DecisionTree::Leaf(std::span<const double> x) const {
  return nodes[LeafIndex(x)];
}

int DecisionTree::Depth() const {
  std::vector<int> depth(nodes.size(), 0);
  int max_depth_seen = 0;
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    const TreeNode& node = nodes[id];
    max_depth_seen = std::max(max_depth_seen, depth[id]);
    if (!node.is_leaf()) {
      depth[node.left] = depth[id] + 1;
      depth[node.right] = depth[id] + 1;
    }
  }
  return max_depth_seen;
}

void DecisionTree::Write(std::string& out) const {
  out += fmt::format("tree {} {} {} {} {}\n",
                     kind == TreeKind::kClassification ? "classification" : "regression",
                     nodes.size(), feature_importance.size(), max_depth,
                     min_samples_leaf);
  std::vector<std::string> imp;
  for (double v : feature_importance) imp.push_back(FormatExact(v));
  out += "importance " + (imp.empty() ? std::string("-") : JoinStrings(imp, ",")) + '\n';
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    const TreeNode& node = nodes[id];
    if (!node.is_leaf()) {
      out += fmt::format("{} split {} {} {} {} {}\n", id, node.feature,
                         FormatExact(node.threshold), node.left, node.right,
                         FormatExact(node.weight));
    } else if (kind == TreeKind::kClassification) {
      out += fmt::format("{} leaf {}", id, FormatExact(node.weight));
      for (double d : node.distribution) out += ' ' + FormatExact(d);
      out += '\n';
    } else {
      out += fmt::format("{} leaf {} {}\n", id, FormatExact(node.weight),
                         FormatExact(node.value));
    }
  }
}

DecisionTree DecisionTree::Read(std::istream& in) {
  const auto fail = [](const std::string& why) -> DataError {
    return DataError("malformed tree: " + why);
  };
  std::string line;
  if (!std::getline(in, line)) throw fail("missing header");
  std::istringstream header(line);
  std::string tag, kind_text;
  std::size_t n_nodes = 0, n_features = 0;
  DecisionTree tree;
  if (!(header >> tag >> kind_text >> n_nodes >> n_features >> tree.max_depth >>
        tree.min_samples_leaf) ||
      tag != "tree") {
    throw fail("bad header '" + line + "'");
  }
  if (kind_text == "classification") {
    tree.kind = TreeKind::kClassification;
  } else if (kind_text == "regression") {
    tree.kind = TreeKind::kRegression;
  } else {
    throw fail("unknown kind '" + kind_text + "'");
  }
  if (!std::getline(in, line) || !line.starts_with("importance ")) {
    throw fail("missing importance line");
  }
  const std::string imp = line.substr(11);
  if (imp != "-") {
    for (const auto& part : SplitString(imp, ',')) {
      double v = 0.0;
      if (!ParseDouble(part, v)) throw fail("bad importance value");
      tree.feature_importance.push_back(v);
    }
  }
  if (tree.feature_importance.size() != n_features) throw fail("importance length");
  tree.nodes.resize(n_nodes);
  for (std::size_t k = 0; k < n_nodes; ++k) {
    if (!std::getline(in, line)) throw fail("truncated node list");
    const auto parts = SplitString(line, ' ');
    long long id = 0;
    if (parts.size() < 3 || !ParseInt(parts[0], id) || id < 0 ||
        static_cast<std::size_t>(id) >= n_nodes) {
      throw fail("bad node line '" + line + "'");
    }
    TreeNode& node = tree.nodes[id];
    if (parts[1] == "split" && parts.size() == 7) {
      long long feature = 0, left = 0, right = 0;
      if (!ParseInt(parts[2], feature) || !ParseDouble(parts[3], node.threshold) ||
          !ParseInt(parts[4], left) || !ParseInt(parts[5], right) ||
          !ParseDouble(parts[6], node.weight) || feature < 0 ||
          static_cast<std::size_t>(feature) >= n_features || left <= id ||
          right <= id || static_cast<std::size_t>(left) >= n_nodes ||
          static_cast<std::size_t>(right) >= n_nodes) {
        throw fail("bad split line '" + line + "'");
      }
      node.feature = static_cast<int>(feature);
      node.left = static_cast<int>(left);
      node.right = static_cast<int>(right);
    } else if (parts[1] == "leaf" && tree.kind == TreeKind::kClassification &&
               parts.size() == 3 + kNumClasses) {
      if (!ParseDouble(parts[2], node.weight)) throw fail("bad leaf weight");
      for (int c = 0; c < kNumClasses; ++c) {
        if (!ParseDouble(parts[3 + c], node.distribution[c])) throw fail("bad leaf");
      }
    } else if (parts[1] == "leaf" && tree.kind == TreeKind::kRegression &&
               parts.size() == 4) {
      if (!ParseDouble(parts[2], node.weight) || !ParseDouble(parts[3], node.value)) {
        throw fail("bad leaf");
      }
    } else {
      throw fail("bad node line '" + line + "'");
    }
  }
  return tree;
}

}  // namespace hdm
