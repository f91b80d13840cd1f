#include "hdm/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "hdm/text_io.hpp"

namespace hdm {

std::string_view ToString(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kContinuous: return "continuous";
    case FeatureKind::kCount: return "count";
    case FeatureKind::kBinary: return "binary";
    case FeatureKind::kPercentage: return "percentage";
  }
  return "continuous";
}

std::string_view ToString(FeatureCategory category) {
  switch (category) {
    case FeatureCategory::kSocioeconomic: return "socioeconomic";
    case FeatureCategory::kTrip: return "trip";
    case FeatureCategory::kLandUse: return "land_use";
  }
  return "socioeconomic";
}

FeatureKind ParseFeatureKind(std::string_view text) {
  for (auto k : {FeatureKind::kContinuous, FeatureKind::kCount,
                 FeatureKind::kBinary, FeatureKind::kPercentage}) {
    if (ToString(k) == text) return k;
  }
  throw DataError("unknown feature kind '" + std::string(text) + "'");
}

FeatureCategory ParseFeatureCategory(std::string_view text) {
  for (auto c : {FeatureCategory::kSocioeconomic, FeatureCategory::kTrip,
                 FeatureCategory::kLandUse}) {
    if (ToString(c) == text) return c;
  }
  throw DataError("unknown feature category '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// FeatureSchema

FeatureSchema::FeatureSchema(std::vector<FeatureColumn> columns,
                             std::set<std::string> log_transformed)
    : columns_(std::move(columns)), log_transformed_(std::move(log_transformed)) {
  std::set<std::string_view> seen;
  for (const FeatureColumn& c : columns_) {
    if (c.name.empty()) throw InvalidArgument("feature name is empty");
    if (c.name == kLabelColumn) {
      throw InvalidArgument("feature name '" + c.name +
                            "' collides with the label column");
    }
    if (!seen.insert(c.name).second) {
      throw InvalidArgument("duplicate feature name '" + c.name + "'");
    }
  }
  for (const std::string& name : log_transformed_) {
    if (!seen.contains(name)) {
      throw InvalidArgument("log-transformed column '" + name +
                            "' is not in the schema");
    }
  }
}

std::vector<std::string> FeatureSchema::names() const {
  std::vector<std::string> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.name);
  return out;
}

std::optional<std::size_t> FeatureSchema::IndexOf(std::string_view name) const {
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    if (columns_[j].name == name) return j;
  }
  return std::nullopt;
}

std::size_t FeatureSchema::RequireIndex(std::string_view name) const {
  if (auto j = IndexOf(name)) return *j;
  throw DataError("missing feature column '" + std::string(name) + "'");
}

FeatureSchema FeatureSchema::Select(std::span<const std::string> names) const {
  std::vector<FeatureColumn> selected;
  std::set<std::string> logs;
  for (const std::string& name : names) {
    selected.push_back(columns_[RequireIndex(name)]);
    if (log_transformed_.contains(name)) logs.insert(name);
  }
  return FeatureSchema(std::move(selected), std::move(logs));
}

// ---------------------------------------------------------------------------
// Dataset

namespace {

void CheckValue(const FeatureColumn& column, double v, std::size_t row) {
  const auto where = [&] {
    return fmt::format("row {}, column '{}'", row, column.name);
  };
  if (!std::isfinite(v)) {
    throw DataError(where() + ": non-finite value");
  }
  switch (column.kind) {
    case FeatureKind::kBinary:
      if (v != 0.0 && v != 1.0) {
        throw DataError(where() + ": binary column value " + FormatExact(v) +
                        " not in {0, 1}");
      }
      break;
    case FeatureKind::kPercentage:
      if (v < 0.0 || v > 1.0) {
        throw DataError(where() + ": percentage value " + FormatExact(v) +
                        " outside [0, 1]");
      }
      break;
    case FeatureKind::kCount:
    case FeatureKind::kContinuous:
      break;
  }
}

}  // namespace

Dataset::Dataset(FeatureSchema schema, std::vector<double> values,
                 std::vector<int> labels)
    : schema_(std::move(schema)),
      values_(std::move(values)),
      labels_(std::move(labels)) {
  if (labels_.empty()) throw DataError("dataset has no rows");
  if (values_.size() != labels_.size() * schema_.size()) {
    throw DataError(fmt::format(
        "dataset shape mismatch: {} values for {} rows x {} features",
        values_.size(), labels_.size(), schema_.size()));
  }
  const std::size_t p = schema_.size();
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!IsValidLabel(labels_[i])) {
      throw DataError(fmt::format("row {}: label {} outside 0..5", i,
                                  labels_[i]));
    }
    for (std::size_t j = 0; j < p; ++j) {
      CheckValue(schema_.column(j), values_[i * p + j], i);
    }
  }
}

std::vector<double> Dataset::column(std::size_t j) const {
  std::vector<double> out(n_rows());
  for (std::size_t i = 0; i < n_rows(); ++i) out[i] = value(i, j);
  return out;
}

Dataset Dataset::SelectFeatures(std::span<const std::string> names) const {
  FeatureSchema selected = schema_.Select(names);
  std::vector<std::size_t> idx;
  for (const auto& name : names) idx.push_back(schema_.RequireIndex(name));
  std::vector<double> values;
  values.reserve(n_rows() * idx.size());
  for (std::size_t i = 0; i < n_rows(); ++i) {
    for (std::size_t j : idx) values.push_back(value(i, j));
  }
  return Dataset(std::move(selected), std::move(values), labels_);
}

Dataset Dataset::SelectRows(std::span<const std::size_t> rows) const {
  std::vector<double> values;
  std::vector<int> labels;
  values.reserve(rows.size() * n_features());
  labels.reserve(rows.size());
  for (std::size_t i : rows) {
    if (i >= n_rows()) throw InvalidArgument("row index out of range");
    const auto r = row(i);
    values.insert(values.end(), r.begin(), r.end());
    labels.push_back(labels_[i]);
  }
  return Dataset(schema_, std::move(values), std::move(labels));
}

// ---------------------------------------------------------------------------
// CSV

namespace {

struct RawCsv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

RawCsv ReadRawCsv(std::string_view text, std::string_view source) {
  RawCsv csv;
  std::size_t line_no = 0;
  for (const std::string& raw_line : SplitString(text, '\n')) {
    ++line_no;
    std::string_view line = raw_line;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
    if (Trim(line).empty()) continue;
    std::vector<std::string> cells = SplitString(line, ',');
    for (auto& cell : cells) cell = std::string(Trim(cell));
    if (csv.header.empty()) {
      csv.header = std::move(cells);
      continue;
    }
    if (cells.size() != csv.header.size()) {
      throw DataError(fmt::format("{}: row {} has {} cells, header has {}",
                                  source, line_no, cells.size(),
                                  csv.header.size()));
    }
    csv.rows.push_back(std::move(cells));
  }
  if (csv.header.empty()) throw DataError(std::string(source) + ": empty file");
  return csv;
}

int ParseLabel(std::string_view cell, std::size_t row, std::string_view source) {
  long long label = 0;
  if (!ParseInt(cell, label)) {
    double as_double = 0.0;
    if (!ParseDouble(cell, as_double) || as_double != std::floor(as_double)) {
      throw DataError(fmt::format("{}: row {}, column '{}': cannot parse '{}'",
                                  source, row, kLabelColumn, cell));
    }
    label = static_cast<long long>(as_double);
  }
  if (label < 0 || label >= kNumClasses) {
    throw DataError(fmt::format("{}: row {}, column '{}': label outside 0..5",
                                source, row, kLabelColumn));
  }
  return static_cast<int>(label);
}

}  // namespace

Dataset ParseDatasetCsv(std::string_view text, const FeatureSchema& schema,
                        std::string_view source) {
  const RawCsv csv = ReadRawCsv(text, source);
  std::optional<std::size_t> label_pos;
  std::vector<std::optional<std::size_t>> feature_of_cell(csv.header.size());
  for (std::size_t c = 0; c < csv.header.size(); ++c) {
    const std::string& name = csv.header[c];
    if (name == kLabelColumn) {
      label_pos = c;
    } else if (auto j = schema.IndexOf(name)) {
      feature_of_cell[c] = *j;
    } else {
      throw DataError(fmt::format("{}: unexpected column '{}'", source, name));
    }
  }
  if (!label_pos) {
    throw DataError(fmt::format("{}: missing label column '{}'", source,
                                kLabelColumn));
  }
  for (const auto& column : schema.columns()) {
    if (std::find(csv.header.begin(), csv.header.end(), column.name) ==
        csv.header.end()) {
      throw DataError(fmt::format("{}: missing column '{}'", source,
                                  column.name));
    }
  }
  if (csv.rows.empty()) throw DataError(std::string(source) + ": no data rows");

  const std::size_t p = schema.size();
  std::vector<double> values(csv.rows.size() * p);
  std::vector<int> labels(csv.rows.size());
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const std::size_t file_row = i + 2;
    for (std::size_t c = 0; c < csv.header.size(); ++c) {
      const std::string& cell = csv.rows[i][c];
      if (c == *label_pos) {
        labels[i] = ParseLabel(cell, file_row, source);
        continue;
      }
      const std::size_t j = *feature_of_cell[c];
      double v = 0.0;
      if (!ParseDouble(cell, v)) {
        throw DataError(fmt::format("{}: row {}, column '{}': cannot parse '{}'",
                                    source, file_row, csv.header[c], cell));
      }
      if (!std::isfinite(v)) {
        throw DataError(fmt::format("{}: row {}, column '{}': non-finite value",
                                    source, file_row, csv.header[c]));
      }
      values[i * p + j] = v;
    }
  }
  try {
    return Dataset(schema, std::move(values), std::move(labels));
  } catch (const DataError& e) {
    throw DataError(std::string(source) + ": " + e.what());
  }
}

Dataset LoadDataset(const std::filesystem::path& path,
                    const FeatureSchema& schema) {
  return ParseDatasetCsv(ReadFile(path), schema, path.string());
}

FeatureSchema InferSchema(std::string_view csv_text) {
  const RawCsv csv = ReadRawCsv(csv_text, "<schema>");
  std::vector<FeatureColumn> columns;
  for (std::size_t c = 0; c < csv.header.size(); ++c) {
    const std::string& name = csv.header[c];
    if (name == kLabelColumn) continue;
    bool all_binary = true;
    bool all_unit = true;
    bool all_count = true;
    for (const auto& row : csv.rows) {
      double v = 0.0;
      if (!ParseDouble(row[c], v)) {
        all_binary = all_unit = all_count = false;
        break;
      }
      all_binary = all_binary && (v == 0.0 || v == 1.0);
      all_unit = all_unit && v >= 0.0 && v <= 1.0;
      all_count = all_count && v >= 0.0 && v == std::floor(v);
    }
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char ch) { return std::tolower(ch); });
    FeatureColumn column{name, FeatureKind::kContinuous,
                         FeatureCategory::kSocioeconomic};
    const bool percentage_name =
        lower.find("percentage") != std::string::npos ||
        lower.find("precentage") != std::string::npos;
    if (all_binary && !percentage_name) {
      column.kind = FeatureKind::kBinary;
    } else if (percentage_name && all_unit) {
      column.kind = FeatureKind::kPercentage;
    } else if (all_count) {
      column.kind = FeatureKind::kCount;
    }
    if (lower.starts_with("epoi_") || lower.starts_with("lu_") ||
        lower.starts_with("pop")) {
      column.category = FeatureCategory::kLandUse;
    } else if (lower.find("trip") != std::string::npos ||
               lower.find("travel") != std::string::npos) {
      column.category = FeatureCategory::kTrip;
    }
    columns.push_back(std::move(column));
  }
  return FeatureSchema(std::move(columns));
}

Dataset LoadDataset(const std::filesystem::path& path) {
  const std::string text = ReadFile(path);
  FeatureSchema schema;
  try {
    schema = InferSchema(text);
  } catch (const Error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return ParseDatasetCsv(text, schema, path.string());
}

std::string FormatDatasetCsv(const Dataset& dataset) {
  std::string out;
  for (const auto& column : dataset.schema().columns()) {
    out += column.name;
    out += ',';
  }
  out += kLabelColumn;
  out += '\n';
  for (std::size_t i = 0; i < dataset.n_rows(); ++i) {
    for (double v : dataset.row(i)) {
      out += FormatExact(v);
      out += ',';
    }
    out += std::to_string(dataset.label(i));
    out += '\n';
  }
  return out;
}

void SaveDataset(const std::filesystem::path& path, const Dataset& dataset) {
  WriteFile(path, FormatDatasetCsv(dataset));
}

// ---------------------------------------------------------------------------
// Transforms and splitting

Dataset TransformFeatures(
    const Dataset& dataset,
    std::span<const std::pair<std::string, Transform>> transforms) {
  std::vector<FeatureColumn> columns = dataset.schema().columns();
  std::set<std::string> logs = dataset.schema().log_transformed();
  std::vector<double> values = dataset.values();
  const std::size_t p = dataset.n_features();
  for (const auto& [name, transform] : transforms) {
    const std::size_t j = dataset.schema().RequireIndex(name);
    if (transform == Transform::kIdentity) continue;
    for (std::size_t i = 0; i < dataset.n_rows(); ++i) {
      double& v = values[i * p + j];
      if (v < 0.0) {
        throw InvalidArgument(fmt::format(
            "log1p applied to negative value {} at row {}, column '{}'",
            FormatExact(v), i, name));
      }
      v = std::log1p(v);
    }
    columns[j].kind = FeatureKind::kContinuous;
    logs.insert(name);
  }
  return Dataset(FeatureSchema(std::move(columns), std::move(logs)),
                 std::move(values), dataset.labels());
}

std::size_t TrainSize(std::size_t n, double train_fraction) {
  const auto raw =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction + 0.5));
  return std::clamp<std::size_t>(raw, 1, n - 1);
}

std::pair<Dataset, Dataset> SplitTrainTest(const Dataset& dataset,
                                           double train_fraction,
                                           std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("train_fraction must lie strictly between 0 and 1");
  }
  const std::size_t n = dataset.n_rows();
  if (n < 2) throw InvalidArgument("cannot split a dataset with fewer than 2 rows");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(DeriveSeed(seed, "split"));
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_train = TrainSize(n, train_fraction);
  std::vector<std::size_t> train(order.begin(), order.begin() + n_train);
  std::vector<std::size_t> test(order.begin() + n_train, order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {dataset.SelectRows(train), dataset.SelectRows(test)};
}

ClassVector ClassCounts(std::span<const int> labels) {
  ClassVector counts{};
  for (int y : labels) {
    if (!IsValidLabel(y)) throw InvalidArgument("label outside 0..5");
    counts[y] += 1.0;
  }
  return counts;
}

}  // namespace hdm
