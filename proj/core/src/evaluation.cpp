#include "hdm/evaluation.hpp"

#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "hdm/text_io.hpp"

namespace hdm {

long long ConfusionMatrix::RowSum(int true_class) const {
  long long sum = 0;
  for (long long v : counts[true_class]) sum += v;
  return sum;
}

long long ConfusionMatrix::ColumnSum(int predicted_class) const {
  long long sum = 0;
  for (const auto& row : counts) sum += row[predicted_class];
  return sum;
}

long long ConfusionMatrix::Trace() const {
  long long sum = 0;
  for (int c = 0; c < kNumClasses; ++c) sum += counts[c][c];
  return sum;
}

ConfusionMatrix MakeConfusionMatrix(std::span<const int> y_true,
                                    std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw InvalidArgument(fmt::format("length mismatch: {} true labels, {} predictions",
                                      y_true.size(), y_pred.size()));
  }
  if (y_true.empty()) throw InvalidArgument("confusion matrix of empty label vectors");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (!IsValidLabel(y_true[i]) || !IsValidLabel(y_pred[i])) {
      throw InvalidArgument(fmt::format("label outside 0..5 at position {}", i));
    }
    ++m.counts[y_true[i]][y_pred[i]];
  }
  m.n_total = static_cast<long long>(y_true.size());
  return m;
}

std::array<ClassMetrics, kNumClasses> PrecisionRecall(const ConfusionMatrix& m) {
  std::array<ClassMetrics, kNumClasses> out{};
  for (int c = 0; c < kNumClasses; ++c) {
    const double diag = static_cast<double>(m.counts[c][c]);
    if (const long long col = m.ColumnSum(c); col > 0) {
      out[c].precision = diag / static_cast<double>(col);
    }
    if (const long long row = m.RowSum(c); row > 0) {
      out[c].recall = diag / static_cast<double>(row);
    }
  }
  return out;
}

double OverallAccuracy(const ConfusionMatrix& m) {
  if (m.n_total < 1) throw InvalidArgument("accuracy of an empty confusion matrix");
  return static_cast<double>(m.Trace()) / static_cast<double>(m.n_total);
}

ClassVector AggregateShares(std::span<const int> labels) {
  if (labels.empty()) throw InvalidArgument("shares of an empty label vector");
  ClassVector shares = ClassCounts(labels);
  for (double& s : shares) s /= static_cast<double>(labels.size());
  return shares;
}

double TvDistance(const ClassVector& a, const ClassVector& b) {
  double sum = 0.0;
  for (int c = 0; c < kNumClasses; ++c) sum += std::abs(a[c] - b[c]);
  return 0.5 * sum;
}

std::array<std::optional<ClassVector>, kNumClasses> RecallHeatMap(
    const ConfusionMatrix& m) {
  std::array<std::optional<ClassVector>, kNumClasses> out{};
  for (int c = 0; c < kNumClasses; ++c) {
    const long long row = m.RowSum(c);
    if (row == 0) continue;
    ClassVector r{};
    for (int k = 0; k < kNumClasses; ++k) {
      r[k] = static_cast<double>(m.counts[c][k]) / static_cast<double>(row);
    }
    out[c] = r;
  }
  return out;
}

ModelReport EvaluateModel(const Classifier& model, const Dataset& test,
                          std::string model_id, std::string dataset_id,
                          std::uint64_t seed) {
  for (const auto& name : model.feature_names()) {
    if (!test.schema().IndexOf(name)) {
      throw DataError(fmt::format(
          "schema mismatch: model '{}' uses feature '{}' which the test data lacks",
          model_id, name));
    }
  }
  ModelReport r;
  r.model_id = std::move(model_id);
  r.family = std::string(ToString(model.family()));
  r.dataset_id = std::move(dataset_id);
  r.seed = seed;
  r.n_test = test.n_rows();

  const std::vector<int> predicted = PredictAll(model, test);
  r.confusion = MakeConfusionMatrix(test.labels(), predicted);
  r.per_class = PrecisionRecall(r.confusion);
  r.accuracy = OverallAccuracy(r.confusion);
  r.observed_shares = AggregateShares(test.labels());
  r.predicted_shares_argmax = AggregateShares(predicted);
  r.tv_argmax = TvDistance(r.predicted_shares_argmax, r.observed_shares);
  if (model.has_probabilities()) {
    ClassVector expected{};
    for (const auto& p : PredictProbaAll(model, test)) {
      for (int c = 0; c < kNumClasses; ++c) expected[c] += p[c];
    }
    for (double& e : expected) e /= static_cast<double>(test.n_rows());
    r.predicted_shares_expected = expected;
    r.tv_expected = TvDistance(expected, r.observed_shares);
  }
  for (int c = 0; c < kNumClasses; ++c) {
    const double delta = r.predicted_shares_argmax[c] - r.observed_shares[c];
    r.share_delta_absolute[c] = delta;
    if (r.observed_shares[c] > 0.0) r.share_delta_relative[c] = delta / r.observed_shares[c];
  }
  return r;
}

std::vector<ModelReport> BuildReport(std::span<const ReportInput> models,
                                     const Dataset& test,
                                     const std::string& dataset_id) {
  std::vector<ModelReport> out;
  for (const auto& m : models) {
    if (m.model == nullptr) throw InvalidArgument("null model in report input");
    out.push_back(EvaluateModel(*m.model, test, m.model_id, dataset_id, m.seed));
  }
  return out;
}

namespace {

using Json = nlohmann::ordered_json;

Json ToJson(const ClassVector& v) { return Json(std::vector<double>(v.begin(), v.end())); }

template <typename T>
Json ToJson(const std::optional<T>& v) {
  if (!v) return nullptr;
  if constexpr (std::is_same_v<T, ClassVector>) {
    return ToJson(*v);
  } else {
    return *v;
  }
}

// Zero denominators are marked; quantities a model cannot supply stay blank.
std::string Cell(const std::optional<double>& v) {
  return v ? FormatExact(*v) : std::string();
}
std::string MetricCell(const std::optional<double>& v) {
  return v ? FormatExact(*v) : std::string("undefined");
}

std::string Percent(double share) { return fmt::format("{:.1f}%", 100.0 * share); }

std::string Percent(const std::optional<double>& share) {
  return share ? Percent(*share) : std::string("undefined");
}

}  // namespace

std::string ReportToJson(std::span<const ModelReport> reports) {
  Json doc;
  doc["dataset"] = reports.empty() ? std::string() : reports.front().dataset_id;
  doc["n_test"] = reports.empty() ? 0 : reports.front().n_test;
  Json models = Json::array();
  for (const auto& r : reports) {
    Json m;
    m["model"] = r.model_id;
    m["family"] = r.family;
    m["seed"] = r.seed;
    m["accuracy"] = r.accuracy;
    Json per_class = Json::array();
    for (int c = 0; c < kNumClasses; ++c) {
      Json entry;
      entry["class"] = c;
      entry["precision"] = ToJson(r.per_class[c].precision);
      entry["recall"] = ToJson(r.per_class[c].recall);
      per_class.push_back(std::move(entry));
    }
    m["per_class"] = std::move(per_class);
    m["observed_shares"] = ToJson(r.observed_shares);
    m["predicted_shares_argmax"] = ToJson(r.predicted_shares_argmax);
    m["predicted_shares_expected"] = ToJson(r.predicted_shares_expected);
    m["tv_argmax"] = r.tv_argmax;
    m["tv_expected"] = ToJson(r.tv_expected);
    m["share_delta_absolute"] = ToJson(r.share_delta_absolute);
    Json relative = Json::array();
    for (const auto& d : r.share_delta_relative) relative.push_back(ToJson(d));
    m["share_delta_relative"] = std::move(relative);
    Json confusion = Json::array();
    for (const auto& row : r.confusion.counts) {
      confusion.push_back(std::vector<long long>(row.begin(), row.end()));
    }
    m["confusion_matrix"] = std::move(confusion);
    models.push_back(std::move(m));
  }
  doc["models"] = std::move(models);
  return doc.dump(2) + '\n';
}

std::string ReportToCsv(std::span<const ModelReport> reports) {
  std::string out =
      "model,family,class,precision,recall,observed_share,predicted_share_argmax,"
      "predicted_share_expected,share_delta_absolute,share_delta_relative,accuracy,"
      "tv_argmax,tv_expected\n";
  for (const auto& r : reports) {
    for (int c = 0; c < kNumClasses; ++c) {
      const std::optional<double> expected =
          r.predicted_shares_expected ? std::optional<double>((*r.predicted_shares_expected)[c])
                                      : std::nullopt;
      out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.model_id, r.family, c,
                         MetricCell(r.per_class[c].precision), MetricCell(r.per_class[c].recall),
                         FormatExact(r.observed_shares[c]),
                         FormatExact(r.predicted_shares_argmax[c]), Cell(expected),
                         FormatExact(r.share_delta_absolute[c]),
                         MetricCell(r.share_delta_relative[c]), FormatExact(r.accuracy),
                         FormatExact(r.tv_argmax), Cell(r.tv_expected));
    }
  }
  return out;
}

std::string HeatMapCsv(const ModelReport& report) {
  std::string out = "true\\predicted";
  for (int c = 0; c < kNumClasses; ++c) out += fmt::format(",{}", c);
  out += '\n';
  const auto map = RecallHeatMap(report.confusion);
  for (int c = 0; c < kNumClasses; ++c) {
    out += std::to_string(c);
    for (int k = 0; k < kNumClasses; ++k) {
      out += ',';
      if (map[c]) out += FormatExact((*map[c])[k]);
    }
    out += '\n';
  }
  return out;
}

std::string FormatReportSummary(std::span<const ModelReport> reports) {
  std::string out;
  for (const auto& r : reports) {
    out += fmt::format("model {} ({}) on {} test rows\n", r.model_id, r.family, r.n_test);
    out += fmt::format("  overall accuracy {}\n", Percent(r.accuracy));
    out += "  class  precision  recall     observed  predicted";
    out += r.predicted_shares_expected ? "  expected\n" : "\n";
    for (int c = 0; c < kNumClasses; ++c) {
      out += fmt::format("  {:<5}  {:>9}  {:>9}  {:>8}  {:>9}", c,
                         Percent(r.per_class[c].precision), Percent(r.per_class[c].recall),
                         Percent(r.observed_shares[c]),
                         Percent(r.predicted_shares_argmax[c]));
      if (r.predicted_shares_expected) {
        out += fmt::format("  {:>8}", Percent((*r.predicted_shares_expected)[c]));
      }
      out += '\n';
    }
    out += fmt::format("  total variation (argmax) {}", Percent(r.tv_argmax));
    if (r.tv_expected) out += fmt::format(", (expected) {}", Percent(*r.tv_expected));
    out += "\n\n";
  }
  return out;
}

}  // namespace hdm
