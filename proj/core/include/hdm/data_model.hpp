#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hdm/common.hpp"

namespace hdm {

// Name of the ordinal outcome column in every dataset file.
inline constexpr std::string_view kLabelColumn = "deliveries";

enum class FeatureKind { kContinuous, kCount, kBinary, kPercentage };
enum class FeatureCategory { kSocioeconomic, kTrip, kLandUse };

std::string_view ToString(FeatureKind kind);
std::string_view ToString(FeatureCategory category);
FeatureKind ParseFeatureKind(std::string_view text);
FeatureCategory ParseFeatureCategory(std::string_view text);

struct FeatureColumn {
  std::string name;
  FeatureKind kind = FeatureKind::kContinuous;
  FeatureCategory category = FeatureCategory::kSocioeconomic;

  friend bool operator==(const FeatureColumn&, const FeatureColumn&) = default;
};

// Ordered, uniquely named feature columns.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  // Throws InvalidArgument on empty or duplicate names, or when a
  // log-transformed name is not a column.
  explicit FeatureSchema(std::vector<FeatureColumn> columns,
                         std::set<std::string> log_transformed = {});

  std::size_t size() const { return columns_.size(); }
  const FeatureColumn& column(std::size_t j) const { return columns_[j]; }
  const std::vector<FeatureColumn>& columns() const { return columns_; }
  const std::set<std::string>& log_transformed() const {
    return log_transformed_;
  }
  std::vector<std::string> names() const;

  std::optional<std::size_t> IndexOf(std::string_view name) const;
  // Like IndexOf but throws DataError naming the missing column.
  std::size_t RequireIndex(std::string_view name) const;

  FeatureSchema Select(std::span<const std::string> names) const;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

 private:
  std::vector<FeatureColumn> columns_;
  std::set<std::string> log_transformed_;
};

// Feature matrix (row-major) plus labels in 0..5. Immutable once built; the
// constructor enforces every schema and label invariant.
class Dataset {
 public:
  Dataset(FeatureSchema schema, std::vector<double> values,
          std::vector<int> labels);

  std::size_t n_rows() const { return labels_.size(); }
  std::size_t n_features() const { return schema_.size(); }
  const FeatureSchema& schema() const { return schema_; }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * n_features(), n_features()};
  }
  double value(std::size_t i, std::size_t j) const {
    return values_[i * n_features() + j];
  }
  int label(std::size_t i) const { return labels_[i]; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double> column(std::size_t j) const;

  Dataset SelectFeatures(std::span<const std::string> names) const;
  Dataset SelectRows(std::span<const std::size_t> rows) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  FeatureSchema schema_;
  std::vector<double> values_;
  std::vector<int> labels_;
};

// CSV: header row, comma separated, label column `deliveries`. Every schema
// column must be present; extra columns are an error. Errors name the row
// (1-based, header is row 1) and column.
Dataset ParseDatasetCsv(std::string_view text, const FeatureSchema& schema,
                        std::string_view source = "<memory>");
Dataset LoadDataset(const std::filesystem::path& path,
                    const FeatureSchema& schema);

// Schema inferred from a CSV header and its values: {0,1}-valued columns are
// binary, names containing "percentage" (or the survey's "precentage") with
// values in [0,1] are percentages, nonnegative integers are counts and the
// rest continuous. EPOI_/LU_/Pop prefixes map to land use, names mentioning
// trips or travel to trip attributes.
FeatureSchema InferSchema(std::string_view csv_text);
Dataset LoadDataset(const std::filesystem::path& path);

std::string FormatDatasetCsv(const Dataset& dataset);
void SaveDataset(const std::filesystem::path& path, const Dataset& dataset);

enum class Transform { kIdentity, kLog1p };

Dataset TransformFeatures(
    const Dataset& dataset,
    std::span<const std::pair<std::string, Transform>> transforms);

// round-half-up of n * train_fraction, kept inside [1, n - 1].
std::size_t TrainSize(std::size_t n, double train_fraction);

// Uniform random partition into (train, test). Rows keep their original
// relative order inside each part.
std::pair<Dataset, Dataset> SplitTrainTest(const Dataset& dataset,
                                           double train_fraction,
                                           std::uint64_t seed);

// Class frequencies of a label vector.
ClassVector ClassCounts(std::span<const int> labels);

}  // namespace hdm
