#include "hdm/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "hdm/evaluation.hpp"
#include "hdm/parallel.hpp"
#include "hdm/text_io.hpp"

namespace hdm {

std::vector<std::vector<std::size_t>> KFoldIndices(std::span<const int> labels, int k,
                                                   std::uint64_t seed) {
  if (k < 2) throw InvalidArgument(fmt::format("k must be >= 2, got {}", k));
  if (static_cast<std::size_t>(k) > labels.size()) {
    throw InvalidArgument(
        fmt::format("k = {} exceeds the number of rows ({})", k, labels.size()));
  }
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!IsValidLabel(labels[i])) throw InvalidArgument("label outside 0..5");
    by_class[labels[i]].push_back(i);
  }
  std::mt19937_64 rng(DeriveSeed(seed, "cv.folds"));
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t position = 0;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i : members) folds[position++ % k].push_back(i);
  }
  for (auto& fold : folds) std::sort(fold.begin(), fold.end());
  return folds;
}

CrossValidationResult CrossValidate(ModelFamily family, const ParamSet& params,
                                    const Dataset& data, int k, std::uint64_t seed) {
  const auto folds = KFoldIndices(data.labels(), k, seed);
  CrossValidationResult result;
  result.folds.resize(folds.size());
  ParallelFor(folds.size(), [&](std::size_t f) {
    std::vector<bool> held_out(data.n_rows(), false);
    for (std::size_t i : folds[f]) held_out[i] = true;
    std::vector<std::size_t> train_rows;
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
      if (!held_out[i]) train_rows.push_back(i);
    }
    FoldResult& out = result.folds[f];
    try {
      const Dataset train = data.SelectRows(train_rows);
      const Dataset test = data.SelectRows(folds[f]);
      const auto model = FitClassifier(family, params, train, DeriveSeed(seed, "cv.fit", f));
      if (auto warning = model->FitWarning()) out.warning = *warning;
      out.accuracy =
          OverallAccuracy(MakeConfusionMatrix(test.labels(), PredictAll(*model, test)));
    } catch (const Error& e) {
      out.error = e.what();
    }
  });
  double sum = 0.0;
  int ok = 0;
  for (const auto& fold : result.folds) {
    if (fold.accuracy) {
      sum += *fold.accuracy;
      ++ok;
    } else {
      ++result.n_failed;
    }
  }
  result.mean_accuracy = ok > 0 ? sum / ok : std::numeric_limits<double>::quiet_NaN();
  return result;
}

HyperparamRange HyperparamRange::Integer(std::string name, long long lower,
                                         long long upper) {
  HyperparamRange r;
  r.name = std::move(name);
  r.kind = Kind::kInteger;
  r.lower = static_cast<double>(lower);
  r.upper = static_cast<double>(upper);
  return r;
}

HyperparamRange HyperparamRange::Real(std::string name, double lower, double upper) {
  HyperparamRange r;
  r.name = std::move(name);
  r.kind = Kind::kReal;
  r.lower = lower;
  r.upper = upper;
  return r;
}

HyperparamRange HyperparamRange::Categorical(std::string name,
                                             std::vector<double> choices) {
  HyperparamRange r;
  r.name = std::move(name);
  r.kind = Kind::kCategorical;
  r.choices = std::move(choices);
  return r;
}

void HyperparamDomain::Validate() const {
  if (ranges.empty()) throw InvalidArgument("empty hyperparameter domain");
  std::set<std::string> names;
  for (const auto& r : ranges) {
    if (r.name.empty()) throw InvalidArgument("hyperparameter with an empty name");
    if (!names.insert(r.name).second) {
      throw InvalidArgument(fmt::format("hyperparameter '{}' listed twice", r.name));
    }
    switch (r.kind) {
      case HyperparamRange::Kind::kCategorical:
        if (r.choices.empty()) {
          throw InvalidArgument(fmt::format("hyperparameter '{}' has no choices", r.name));
        }
        for (double c : r.choices) {
          if (!std::isfinite(c)) {
            throw InvalidArgument(fmt::format("hyperparameter '{}' has a non-finite choice",
                                              r.name));
          }
        }
        break;
      case HyperparamRange::Kind::kInteger:
        if (r.lower != std::floor(r.lower) || r.upper != std::floor(r.upper)) {
          throw InvalidArgument(
              fmt::format("hyperparameter '{}' needs integer bounds", r.name));
        }
        [[fallthrough]];
      case HyperparamRange::Kind::kReal:
        if (!std::isfinite(r.lower) || !std::isfinite(r.upper) || r.lower > r.upper) {
          throw InvalidArgument(fmt::format(
              "hyperparameter '{}' has an empty range [{}, {}]", r.name, r.lower, r.upper));
        }
        break;
    }
  }
}

ParamSet HyperparamDomain::Draw(std::mt19937_64& rng) const {
  ParamSet out;
  for (const auto& r : ranges) {
    switch (r.kind) {
      case HyperparamRange::Kind::kInteger: {
        std::uniform_int_distribution<long long> d(static_cast<long long>(r.lower),
                                                   static_cast<long long>(r.upper));
        out[r.name] = static_cast<double>(d(rng));
        break;
      }
      case HyperparamRange::Kind::kReal: {
        std::uniform_real_distribution<double> d(r.lower, r.upper);
        out[r.name] = r.lower == r.upper ? r.lower : d(rng);
        break;
      }
      case HyperparamRange::Kind::kCategorical: {
        std::uniform_int_distribution<std::size_t> d(0, r.choices.size() - 1);
        out[r.name] = r.choices[d(rng)];
        break;
      }
    }
  }
  return out;
}

HyperparamDomain HyperparamDomain::Default(ModelFamily family, std::size_t n_features) {
  using R = HyperparamRange;
  switch (family) {
    case ModelFamily::kRandomForest:
      return {{R::Integer("n_trees", 50, 500), R::Integer("max_depth", 3, 20),
               R::Integer("min_samples_leaf", 1, 20),
               R::Integer("features_per_split", 1,
                          static_cast<long long>(std::max<std::size_t>(1, n_features)))}};
    case ModelFamily::kGradientBoosting:
      return {{R::Integer("n_rounds", 50, 500), R::Real("learning_rate", 0.01, 0.3),
               R::Integer("max_depth", 2, 8), R::Real("lambda_l2", 0.1, 10.0),
               R::Real("column_subsample", 0.5, 1.0)}};
    case ModelFamily::kOrderedProbit:
      return {{R::Categorical("max_iter", {200.0})}};
  }
  throw InvalidArgument("unknown model family");
}

HyperparamDomain ParseHyperparamDomain(const KvConfig& config, std::string_view section) {
  const auto* s = config.FindSection(section);
  if (s == nullptr) {
    throw InvalidArgument(fmt::format("no [{}] section with a hyperparameter domain", section));
  }
  HyperparamDomain domain;
  for (const auto& [name, value] : s->entries) {
    const auto what = fmt::format("domain entry '{}'", name);
    const auto parts = SplitString(value, ':');
    if (parts.size() == 2 && Trim(parts[0]) == "cat") {
      std::vector<double> choices;
      for (const auto& c : SplitString(parts[1], '|')) {
        choices.push_back(ParseDoubleOrThrow(Trim(c), what));
      }
      domain.ranges.push_back(HyperparamRange::Categorical(name, std::move(choices)));
    } else if (parts.size() == 3 && Trim(parts[0]) == "int") {
      domain.ranges.push_back(HyperparamRange::Integer(
          name, ParseIntOrThrow(Trim(parts[1]), what), ParseIntOrThrow(Trim(parts[2]), what)));
    } else if (parts.size() == 3 && Trim(parts[0]) == "real") {
      domain.ranges.push_back(HyperparamRange::Real(
          name, ParseDoubleOrThrow(Trim(parts[1]), what),
          ParseDoubleOrThrow(Trim(parts[2]), what)));
    } else {
      throw InvalidArgument(fmt::format(
          "{}: expected int:lo:hi, real:lo:hi or cat:a|b|c, got '{}'", what, value));
    }
  }
  domain.Validate();
  return domain;
}

std::string FormatHyperparamDomain(const HyperparamDomain& domain) {
  std::string out;
  for (const auto& r : domain.ranges) {
    switch (r.kind) {
      case HyperparamRange::Kind::kInteger:
        out += fmt::format("{} = int:{}:{}\n", r.name, static_cast<long long>(r.lower),
                           static_cast<long long>(r.upper));
        break;
      case HyperparamRange::Kind::kReal:
        out += fmt::format("{} = real:{}:{}\n", r.name, FormatExact(r.lower),
                           FormatExact(r.upper));
        break;
      case HyperparamRange::Kind::kCategorical: {
        std::vector<std::string> choices;
        for (double c : r.choices) choices.push_back(FormatExact(c));
        out += fmt::format("{} = cat:{}\n", r.name, JoinStrings(choices, "|"));
        break;
      }
    }
  }
  return out;
}

SearchResult RandomizedSearch(ModelFamily family, const HyperparamDomain& domain,
                              int n_draws, const Dataset& data, int k,
                              std::uint64_t seed) {
  if (n_draws < 1) throw InvalidArgument("n_draws must be >= 1");
  domain.Validate();
  SearchResult result;
  result.trials.resize(n_draws);
  for (int i = 0; i < n_draws; ++i) {
    std::mt19937_64 rng(DeriveSeed(seed, "search.draw", static_cast<std::uint64_t>(i)));
    result.trials[i].params = domain.Draw(rng);
  }
  ParallelFor(result.trials.size(), [&](std::size_t i) {
    result.trials[i].cv = CrossValidate(family, result.trials[i].params, data, k, seed);
  });
  bool found = false;
  for (std::size_t i = 0; i < result.trials.size(); ++i) {
    const double score = result.trials[i].cv.mean_accuracy;
    if (std::isnan(score)) continue;
    if (!found || score > result.best_score) {
      found = true;
      result.best_index = i;
      result.best_score = score;
    }
  }
  if (!found) {
    const auto& first = result.trials.front().cv.folds.front();
    throw Error("every search trial failed; first error: " + first.error);
  }
  result.best_params = result.trials[result.best_index].params;
  return result;
}

SelectionResult Rfe(ModelFamily family, const ParamSet& params, const Dataset& data,
                    int k, std::optional<std::size_t> target_count, std::uint64_t seed) {
  const std::size_t p = data.n_features();
  const std::size_t target = target_count.value_or(1);
  if (target < 1 || target > p) {
    throw InvalidArgument(
        fmt::format("target feature count must lie in [1, {}], got {}", p, target));
  }
  SelectionResult result;
  std::vector<std::string> current = data.schema().names();
  while (true) {
    const Dataset subset = data.SelectFeatures(current);
    const auto cv = CrossValidate(family, params, subset, k, seed);
    if (cv.n_failed > 0) {
      const auto failed = std::find_if(cv.folds.begin(), cv.folds.end(),
                                       [](const FoldResult& f) { return !f.accuracy; });
      throw RfeAborted(fmt::format("fit failed with {} features: {}", current.size(),
                                   failed->error),
                       result);
    }
    std::vector<double> importance;
    try {
      importance = FitClassifier(family, params, subset, DeriveSeed(seed, "rfe.fit"))
                       ->FeatureImportance();
    } catch (const Error& e) {
      throw RfeAborted(
          fmt::format("fit failed with {} features: {}", current.size(), e.what()), result);
    }
    // Least important first; among ties the later column goes first.
    std::vector<std::size_t> order(current.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (importance[a] != importance[b]) return importance[a] < importance[b];
      return a > b;
    });
    RfeStep step{current, cv.mean_accuracy, {}};
    if (current.size() == target) {
      for (std::size_t j : order) result.ranked_features.push_back(current[j]);
      result.steps.push_back(std::move(step));
      break;
    }
    step.eliminated = current[order.front()];
    result.ranked_features.push_back(step.eliminated);
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(order.front()));
    result.steps.push_back(std::move(step));
  }

  if (target_count) {
    result.retained_features = result.steps.back().features;
  } else {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& s : result.steps) best = std::max(best, s.mean_accuracy);
    // Steps run from most to fewest features; the last qualifying one is smallest.
    for (const auto& s : result.steps) {
      if (s.mean_accuracy >= best - kRfeAccuracyTolerance) result.retained_features = s.features;
    }
  }
  return result;
}

std::string FormatSearchLog(const SearchResult& result) {
  std::vector<std::string> names;
  for (const auto& [name, value] : result.trials.front().params) names.push_back(name);
  const std::size_t n_folds = result.trials.front().cv.folds.size();
  std::string out = "draw";
  for (const auto& n : names) out += ',' + n;
  out += ",mean_accuracy,n_failed";
  for (std::size_t f = 0; f < n_folds; ++f) out += fmt::format(",fold_{}", f);
  out += ",best\n";
  for (std::size_t i = 0; i < result.trials.size(); ++i) {
    const auto& t = result.trials[i];
    out += std::to_string(i);
    for (const auto& n : names) out += ',' + FormatExact(t.params.at(n));
    out += ',' + FormatExact(t.cv.mean_accuracy) + ',' + std::to_string(t.cv.n_failed);
    for (const auto& fold : t.cv.folds) {
      out += ',';
      if (fold.accuracy) out += FormatExact(*fold.accuracy);
    }
    out += i == result.best_index ? ",1\n" : ",0\n";
  }
  return out;
}

std::string FormatRfeLog(const SelectionResult& result) {
  std::string out = "step,n_features,mean_accuracy,eliminated,retained\n";
  for (std::size_t s = 0; s < result.steps.size(); ++s) {
    const auto& step = result.steps[s];
    const bool retained = step.features == result.retained_features;
    out += fmt::format("{},{},{},{},{}\n", s, step.features.size(),
                       FormatExact(step.mean_accuracy), step.eliminated, retained ? 1 : 0);
  }
  return out;
}

}  // namespace hdm
