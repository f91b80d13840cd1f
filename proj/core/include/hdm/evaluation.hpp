#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hdm/classifier.hpp"
#include "hdm/common.hpp"
#include "hdm/data_model.hpp"

namespace hdm {

// counts[true][predicted].
struct ConfusionMatrix {
  std::array<std::array<long long, kNumClasses>, kNumClasses> counts{};
  long long n_total = 0;

  long long RowSum(int true_class) const;
  long long ColumnSum(int predicted_class) const;
  long long Trace() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// Throws InvalidArgument on empty or unequal-length inputs and labels outside
// 0..5.
ConfusionMatrix MakeConfusionMatrix(std::span<const int> y_true,
                                    std::span<const int> y_pred);

// Empty optionals mark a zero denominator: precision for a class never
// predicted, recall for a class never observed.
struct ClassMetrics {
  std::optional<double> precision;
  std::optional<double> recall;
};
std::array<ClassMetrics, kNumClasses> PrecisionRecall(const ConfusionMatrix& m);

double OverallAccuracy(const ConfusionMatrix& m);

// Class frequencies divided by n. Throws InvalidArgument on empty input.
ClassVector AggregateShares(std::span<const int> labels);
// 0.5 * sum |a_c - b_c|.
double TvDistance(const ClassVector& a, const ClassVector& b);

// Row-normalized confusion counts; rows with no observations are empty.
std::array<std::optional<ClassVector>, kNumClasses> RecallHeatMap(
    const ConfusionMatrix& m);

struct ModelReport {
  std::string model_id;
  std::string family;
  std::string dataset_id;
  std::uint64_t seed = 0;
  std::size_t n_test = 0;
  ConfusionMatrix confusion;
  std::array<ClassMetrics, kNumClasses> per_class{};
  double accuracy = 0.0;
  ClassVector observed_shares{};
  ClassVector predicted_shares_argmax{};
  // Mean predicted probabilities; absent for vote-based models.
  std::optional<ClassVector> predicted_shares_expected;
  double tv_argmax = 0.0;
  std::optional<double> tv_expected;
  // predicted_argmax - observed, and that difference over observed (empty
  // when the class is not observed).
  ClassVector share_delta_absolute{};
  std::array<std::optional<double>, kNumClasses> share_delta_relative{};
};

struct ReportInput {
  std::string model_id;
  const Classifier* model = nullptr;
  std::uint64_t seed = 0;
};

// Scores one model on `test`. Throws DataError when the model's features are
// not all present in the test schema.
ModelReport EvaluateModel(const Classifier& model, const Dataset& test,
                          std::string model_id, std::string dataset_id,
                          std::uint64_t seed);
std::vector<ModelReport> BuildReport(std::span<const ReportInput> models,
                                     const Dataset& test,
                                     const std::string& dataset_id);

// JSON document {"dataset", "n_test", "models": [...]}; doubles keep full
// precision.
std::string ReportToJson(std::span<const ModelReport> reports);
// One row per (model, class).
std::string ReportToCsv(std::span<const ModelReport> reports);
// 6x6 row-normalized heat map with class labels on both axes.
std::string HeatMapCsv(const ModelReport& report);
// Percentages rounded to one decimal place.
std::string FormatReportSummary(std::span<const ModelReport> reports);

}  // namespace hdm
