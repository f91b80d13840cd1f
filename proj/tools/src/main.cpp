// hdm: command-line front end for the delivery-frequency modeling library.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hdm/classifier.hpp"
#include "hdm/data_model.hpp"
#include "hdm/evaluation.hpp"
#include "hdm/explanation.hpp"
#include "hdm/kv_config.hpp"
#include "hdm/model_selection.hpp"
#include "hdm/ordered_probit.hpp"
#include "hdm/parallel.hpp"
#include "hdm/synthetic.hpp"
#include "hdm/text_io.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;

namespace hdm::cli {
namespace {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kFailure = 2,
  kNotConverged = 3,
};

constexpr std::string_view kOutputDirEnv = "HDM_OUTPUT_DIR";

fs::path DefaultOutput(std::string_view name) {
  if (const char* dir = std::getenv(kOutputDirEnv.data()); dir != nullptr && *dir != '\0') {
    return fs::path(dir) / name;
  }
  return fs::path(name);
}

std::string Resolve(const std::string& given, std::string_view fallback) {
  return given.empty() ? DefaultOutput(fallback).string() : given;
}

ParamSet ParseParams(const std::vector<std::string>& items) {
  ParamSet params;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument(fmt::format("--params entry '{}' is not key=value", item));
    }
    const std::string key(Trim(std::string_view(item).substr(0, eq)));
    params[key] = ParseDoubleOrThrow(Trim(std::string_view(item).substr(eq + 1)),
                                     "--params " + key);
  }
  return params;
}

std::string FormatParams(const ParamSet& params) {
  std::vector<std::string> parts;
  for (const auto& [key, value] : params) parts.push_back(key + '=' + FormatExact(value));
  return JoinStrings(parts, ",");
}

Dataset LoadWithFeatures(const std::string& path, const std::vector<std::string>& features) {
  Dataset data = LoadDataset(path);
  return features.empty() ? data : data.SelectFeatures(features);
}

void WriteManifest(Manifest& manifest, const fs::path& path) {
  WriteFile(path, manifest.ToJson());
  std::cout << "manifest " << path.string() << '\n';
}

// ---------------------------------------------------------------------------

struct GenerateOptions {
  std::string spec;
  long long n = 0;
  std::uint64_t seed = 1;
  std::string out;
};

int RunGenerate(const GenerateOptions& o) {
  const SyntheticSpec spec = o.spec.empty() ? DefaultSyntheticSpec() : LoadSyntheticSpec(o.spec);
  spec.Validate();
  const fs::path out = Resolve(o.out, "synthetic.csv");
  const Dataset data = GenerateSynthetic(spec, static_cast<std::size_t>(o.n), o.seed);
  SaveDataset(out, data);

  const ClassVector counts = ClassCounts(data.labels());
  double total = 0.0;
  for (int label : data.labels()) total += label;
  std::cout << fmt::format("generated {} households with {} features -> {}\n", data.n_rows(),
                           data.n_features(), out.string());
  std::cout << "deliveries  count   share\n";
  for (int c = 0; c < kNumClasses; ++c) {
    std::cout << fmt::format("{:<10}  {:>5}  {:>5.1f}%\n", c == 5 ? "5+" : std::to_string(c),
                             counts[c], 100.0 * counts[c] / static_cast<double>(data.n_rows()));
  }
  std::cout << fmt::format("mean weekly deliveries {:.4f}\n",
                           total / static_cast<double>(data.n_rows()));

  Manifest m{"generate", o.seed, {{"spec", o.spec}, {"n", std::to_string(o.n)},
                                  {"seed", std::to_string(o.seed)}, {"out", out.string()}}};
  if (!o.spec.empty()) m.AddInput(o.spec);
  m.AddOutput(out);
  WriteManifest(m, out.string() + ".manifest.json");
  return kOk;
}

struct SplitOptions {
  std::string data;
  double train_fraction = 0.7;
  std::uint64_t seed = 1;
  std::string train_out;
  std::string test_out;
};

int RunSplit(const SplitOptions& o) {
  const Dataset data = LoadDataset(o.data);
  const fs::path train_out = Resolve(o.train_out, "train.csv");
  const fs::path test_out = Resolve(o.test_out, "test.csv");
  const auto [train, test] = SplitTrainTest(data, o.train_fraction, o.seed);
  SaveDataset(train_out, train);
  SaveDataset(test_out, test);
  std::cout << fmt::format("{} training rows -> {}\n{} test rows -> {}\n", train.n_rows(),
                           train_out.string(), test.n_rows(), test_out.string());
  Manifest m{"split", o.seed,
             {{"data", o.data}, {"train-fraction", FormatExact(o.train_fraction)},
              {"seed", std::to_string(o.seed)}, {"train-out", train_out.string()},
              {"test-out", test_out.string()}}};
  m.AddInput(o.data);
  m.AddOutput(train_out);
  m.AddOutput(test_out);
  WriteManifest(m, train_out.string() + ".manifest.json");
  return kOk;
}

struct FitOptions {
  std::string model;
  std::string train;
  std::vector<std::string> features;
  std::vector<std::string> params;
  std::uint64_t seed = 1;
  std::string out;
  std::string report;
};

int RunFit(const FitOptions& o) {
  const ModelFamily family = ParseModelFamily(o.model);
  const ParamSet params = ParseParams(o.params);
  const Dataset data = LoadWithFeatures(o.train, o.features);
  const fs::path out =
      Resolve(o.out, fmt::format("{}.model", ToString(family)));

  const auto model = FitClassifier(family, params, data, o.seed);
  WriteFile(out, model->Serialize());
  std::cout << fmt::format("fitted {} on {} rows, {} features -> {}\n", ToString(family),
                           data.n_rows(), data.n_features(), out.string());

  Manifest m{"fit", o.seed,
             {{"model", std::string(ToString(family))}, {"train", o.train},
              {"features", JoinStrings(o.features, ",")}, {"params", FormatParams(params)},
              {"seed", std::to_string(o.seed)}, {"out", out.string()}}};
  m.AddInput(o.train);
  m.AddOutput(out);
  if (family == ModelFamily::kOrderedProbit) {
    const fs::path report = o.report.empty() ? fs::path(out.string() + ".report.txt")
                                             : fs::path(o.report);
    const OrderedProbitFit fit = ParseFit(KvConfig::Parse(model->Serialize()));
    const std::string text = FormatFitReport(fit);
    WriteFile(report, text);
    std::cout << text;
    m.settings.emplace_back("report", report.string());
    m.AddOutput(report);
  }
  WriteManifest(m, out.string() + ".manifest.json");
  if (const auto warning = model->FitWarning()) {
    std::cerr << "error: " << *warning << "\n(outputs written with converged=false)\n";
    return kNotConverged;
  }
  return kOk;
}

struct SelectOptions {
  std::string model;
  std::string train;
  std::vector<std::string> features;
  std::vector<std::string> params;
  int folds = 10;
  int target = 0;
  std::uint64_t seed = 1;
  std::string out_dir;
};

int RunSelect(const SelectOptions& o) {
  const ModelFamily family = ParseModelFamily(o.model);
  const ParamSet params = ParseParams(o.params);
  const Dataset data = LoadWithFeatures(o.train, o.features);
  if (o.target < 0 || static_cast<std::size_t>(o.target) > data.n_features()) {
    throw InvalidArgument(
        fmt::format("--target must lie in [1, {}] (0 = choose by accuracy)", data.n_features()));
  }
  const fs::path dir = Resolve(o.out_dir, "select");
  const std::optional<std::size_t> target =
      o.target > 0 ? std::optional<std::size_t>(o.target) : std::nullopt;

  Manifest m{"select", o.seed,
             {{"model", std::string(ToString(family))}, {"train", o.train},
              {"features", JoinStrings(o.features, ",")}, {"params", FormatParams(params)},
              {"folds", std::to_string(o.folds)}, {"target", std::to_string(o.target)},
              {"seed", std::to_string(o.seed)}, {"out-dir", dir.string()}}};
  m.AddInput(o.train);

  SelectionResult result;
  int code = kOk;
  try {
    result = Rfe(family, params, data, o.folds, target, o.seed);
  } catch (const RfeAborted& e) {
    std::cerr << "error: " << e.what() << " (partial log written)\n";
    result = e.partial();
    code = kFailure;
  }
  WriteFile(dir / "rfe_steps.csv", FormatRfeLog(result));
  WriteFile(dir / "ranked_features.txt", JoinStrings(result.ranked_features, "\n") + "\n");
  WriteFile(dir / "retained_features.txt", JoinStrings(result.retained_features, ",") + "\n");
  for (const char* name : {"rfe_steps.csv", "ranked_features.txt", "retained_features.txt"}) {
    m.AddOutput(dir / name);
  }
  for (const auto& step : result.steps) {
    std::cout << fmt::format("{:>3} features  cv accuracy {:.4f}  {}\n", step.features.size(),
                             step.mean_accuracy,
                             step.eliminated.empty() ? "" : "drop " + step.eliminated);
  }
  std::cout << "retained: " << JoinStrings(result.retained_features, ",") << '\n';
  WriteManifest(m, dir / "manifest.json");
  return code;
}

struct TuneOptions {
  std::string model;
  std::string train;
  std::vector<std::string> features;
  std::string domain;
  int n_draws = 20;
  int folds = 10;
  std::uint64_t seed = 1;
  std::string out_dir;
};

int RunTune(const TuneOptions& o) {
  const ModelFamily family = ParseModelFamily(o.model);
  const Dataset data = LoadWithFeatures(o.train, o.features);
  HyperparamDomain domain;
  if (o.domain.empty()) {
    domain = HyperparamDomain::Default(family, data.n_features());
  } else {
    const KvConfig config = KvConfig::Load(o.domain);
    domain = ParseHyperparamDomain(config, config.FindSection("domain") ? "domain" : "");
  }
  domain.Validate();
  const fs::path dir = Resolve(o.out_dir, "tune");
  const SearchResult result = RandomizedSearch(family, domain, o.n_draws, data, o.folds, o.seed);

  WriteFile(dir / "trials.csv", FormatSearchLog(result));
  WriteFile(dir / "best_params.txt", FormatParams(result.best_params) + "\n");
  WriteFile(dir / "domain.txt", FormatHyperparamDomain(domain));
  std::cout << fmt::format("best of {} draws: {} (cv accuracy {:.4f})\n", o.n_draws,
                           FormatParams(result.best_params), result.best_score);

  Manifest m{"tune", o.seed,
             {{"model", std::string(ToString(family))}, {"train", o.train},
              {"features", JoinStrings(o.features, ",")}, {"domain", o.domain},
              {"n-draws", std::to_string(o.n_draws)}, {"folds", std::to_string(o.folds)},
              {"seed", std::to_string(o.seed)}, {"out-dir", dir.string()}}};
  m.AddInput(o.train);
  if (!o.domain.empty()) m.AddInput(o.domain);
  for (const char* name : {"trials.csv", "best_params.txt", "domain.txt"}) m.AddOutput(dir / name);
  WriteManifest(m, dir / "manifest.json");
  return kOk;
}

struct EvaluateOptions {
  std::vector<std::string> models;
  std::string test;
  std::uint64_t seed = 1;
  std::string out_dir;
};

int RunEvaluate(const EvaluateOptions& o) {
  const Dataset test = LoadDataset(o.test);
  const fs::path dir = Resolve(o.out_dir, "evaluate");
  std::vector<std::unique_ptr<Classifier>> models;
  std::vector<ReportInput> inputs;
  for (const auto& path : o.models) {
    models.push_back(LoadClassifier(path));
    const std::string id = fs::path(path).stem().string();
    for (const auto& in : inputs) {
      if (in.model_id == id) throw InvalidArgument(fmt::format("duplicate model id '{}'", id));
    }
    inputs.push_back({id, models.back().get(), o.seed});
  }
  const auto reports = BuildReport(inputs, test, fs::path(o.test).stem().string());

  Manifest m{"evaluate", o.seed,
             {{"models", JoinStrings(o.models, ",")}, {"test", o.test},
              {"seed", std::to_string(o.seed)}, {"out-dir", dir.string()}}};
  for (const auto& path : o.models) m.AddInput(path);
  m.AddInput(o.test);
  const std::string summary = FormatReportSummary(reports);
  WriteFile(dir / "report.json", ReportToJson(reports));
  WriteFile(dir / "report.csv", ReportToCsv(reports));
  WriteFile(dir / "summary.txt", summary);
  m.AddOutput(dir / "report.json");
  m.AddOutput(dir / "report.csv");
  m.AddOutput(dir / "summary.txt");
  for (const auto& r : reports) {
    const fs::path heat = dir / fmt::format("heatmap_{}.csv", r.model_id);
    WriteFile(heat, HeatMapCsv(r));
    m.AddOutput(heat);
  }
  std::cout << summary;
  WriteManifest(m, dir / "manifest.json");
  return kOk;
}

struct ExplainOptionsCli {
  std::string model;
  std::string data;
  std::string background;
  int background_size = 100;
  std::string method = "exact";
  int n_permutations = 2000;
  int max_rows = 0;
  std::uint64_t seed = 1;
  std::string out_dir;
};

int RunExplain(const ExplainOptionsCli& o) {
  const ShapMethod method = ParseShapMethod(o.method);
  const auto model = LoadClassifier(o.model);
  const auto& names = model->feature_names();
  if (method == ShapMethod::kExact && names.size() > kMaxExactShapFeatures) {
    throw InvalidArgument(fmt::format(
        "exact SHAP is limited to {} features and this model has {}; "
        "rerun with --method sampled",
        kMaxExactShapFeatures, names.size()));
  }
  Dataset data = LoadDataset(o.data).SelectFeatures(names);
  if (o.max_rows > 0 && static_cast<std::size_t>(o.max_rows) < data.n_rows()) {
    std::vector<std::size_t> rows(static_cast<std::size_t>(o.max_rows));
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    data = data.SelectRows(rows);
  }
  const std::string background_path = o.background.empty() ? o.data : o.background;
  const Background background = SampleBackground(
      LoadDataset(background_path).SelectFeatures(names),
      static_cast<std::size_t>(o.background_size), o.seed);
  const fs::path dir = Resolve(o.out_dir, "explain");

  const PredictFn predict = [&model](std::span<const double> x) {
    return model->PredictProba(x);
  };
  const ExplainOptions options{method, o.n_permutations, o.seed};
  const auto explanations = ExplainRows(predict, data, background, options);
  const ImportanceRanking ranking = GlobalImportance(explanations);

  Manifest m{"explain", o.seed,
             {{"model", o.model}, {"data", o.data}, {"background", o.background},
              {"background-size", std::to_string(o.background_size)},
              {"method", std::string(ToString(method))},
              {"n-permutations", std::to_string(o.n_permutations)},
              {"max-rows", std::to_string(o.max_rows)}, {"seed", std::to_string(o.seed)},
              {"out-dir", dir.string()}}};
  m.AddInput(o.model);
  m.AddInput(o.data);
  if (!o.background.empty()) m.AddInput(o.background);

  WriteFile(dir / "importance.csv", ImportanceCsv(ranking));
  m.AddOutput(dir / "importance.csv");
  for (std::size_t j = 0; j < names.size(); ++j) {
    for (int c = 0; c < kNumClasses; ++c) {
      const fs::path path = dir / "dependence" / fmt::format("{}_class_{}.csv", names[j], c);
      WriteFile(path, DependenceCsv(DependenceTable(explanations, j, c), c));
      m.AddOutput(path);
    }
  }
  std::cout << fmt::format("SHAP ({}, probability scale) for {} rows, background {} rows\n",
                           ToString(method), data.n_rows(), background.size());
  std::cout << "rank  feature                             sum |phi|\n";
  for (std::size_t r = 0; r < ranking.order.size(); ++r) {
    const std::size_t j = ranking.order[r];
    std::cout << fmt::format("{:>4}  {:<34} {:>10.4f}\n", r + 1, names[j], ranking.total[j]);
  }
  WriteManifest(m, dir / "manifest.json");
  return kOk;
}

int Run(const std::vector<std::string>& args);

int RunRerun(const std::string& manifest_path) {
  const Manifest m = Manifest::FromJson(ReadFile(manifest_path));
  for (const auto& in : m.inputs) {
    if (FileSha256(in.path) != in.sha256) {
      throw DataError(fmt::format("input '{}' changed since the manifest was written", in.path));
    }
  }
  const int code = Run(m.CommandLine());
  if (code != kOk) return code;
  int mismatches = 0;
  for (const auto& out : m.outputs) {
    if (!fs::exists(out.path) || FileSha256(out.path) != out.sha256) {
      std::cerr << "error: output differs from manifest: " << out.path << '\n';
      ++mismatches;
    }
  }
  if (mismatches > 0) return kFailure;
  std::cout << fmt::format("reproduced {} outputs\n", m.outputs.size());
  return kOk;
}

int Run(const std::vector<std::string>& args) {
  CLI::App app{"Household delivery-frequency models: ordered probit, random forest, "
               "gradient boosting"};
  app.name("hdm");
  app.require_subcommand(1);
  app.allow_config_extras(false);
  app.set_config("--config", "", "Settings file: key = value lines under [command] sections");
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores); outputs do not depend on it");

  GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic household dataset");
  generate->add_option("--spec", gen.spec, "Synthetic spec file (default: built-in)");
  generate->add_option("--n", gen.n, "Number of households")->required()->check(CLI::PositiveNumber);
  generate->add_option("--seed", gen.seed, "Seed");
  generate->add_option("--out", gen.out, "Output CSV (default synthetic.csv)");

  SplitOptions spl;
  auto* split = app.add_subcommand("split", "Split a dataset into train and test files");
  split->add_option("--data", spl.data, "Input CSV")->required();
  split->add_option("--train-fraction", spl.train_fraction, "Training share")
      ->check(CLI::Range(0.0, 1.0));
  split->add_option("--seed", spl.seed, "Seed");
  split->add_option("--train-out", spl.train_out, "Training CSV (default train.csv)");
  split->add_option("--test-out", spl.test_out, "Test CSV (default test.csv)");

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit one model");
  fit_cmd->add_option("--model", fit.model, "probit, forest or gbm")->required();
  fit_cmd->add_option("--train", fit.train, "Training CSV")->required();
  fit_cmd->add_option("--features", fit.features, "Comma-separated feature columns (default all)")->delimiter(',');
  fit_cmd->add_option("--params", fit.params, "Hyperparameters as key=value,...")->delimiter(',');
  fit_cmd->add_option("--seed", fit.seed, "Seed");
  fit_cmd->add_option("--out", fit.out, "Model file (default <model>.model)");
  fit_cmd->add_option("--report", fit.report, "Probit estimates report (default <out>.report.txt)");

  SelectOptions sel;
  auto* select = app.add_subcommand("select", "Recursive feature elimination");
  select->add_option("--model", sel.model, "probit, forest or gbm")->required();
  select->add_option("--train", sel.train, "Training CSV")->required();
  select->add_option("--features", sel.features, "Starting feature columns (default all)")->delimiter(',');
  select->add_option("--params", sel.params, "Hyperparameters as key=value,...")->delimiter(',');
  select->add_option("--folds", sel.folds, "Cross-validation folds")->check(CLI::Range(2, 1000000));
  select->add_option("--target", sel.target, "Features to keep (0 = smallest set within 1 point of best)");
  select->add_option("--seed", sel.seed, "Seed");
  select->add_option("--out-dir", sel.out_dir, "Output directory (default select)");

  TuneOptions tun;
  auto* tune = app.add_subcommand("tune", "Randomized hyperparameter search");
  tune->add_option("--model", tun.model, "probit, forest or gbm")->required();
  tune->add_option("--train", tun.train, "Training CSV")->required();
  tune->add_option("--features", tun.features, "Feature columns (default all)")->delimiter(',');
  tune->add_option("--domain", tun.domain, "Domain file: name = int:lo:hi | real:lo:hi | cat:a|b");
  tune->add_option("--n-draws", tun.n_draws, "Random draws")->check(CLI::PositiveNumber);
  tune->add_option("--folds", tun.folds, "Cross-validation folds")->check(CLI::Range(2, 1000000));
  tune->add_option("--seed", tun.seed, "Seed");
  tune->add_option("--out-dir", tun.out_dir, "Output directory (default tune)");

  EvaluateOptions eva;
  auto* evaluate = app.add_subcommand("evaluate", "Score fitted models on held-out data");
  evaluate->add_option("--models", eva.models, "Model files")->required()->delimiter(',');
  evaluate->add_option("--test", eva.test, "Test CSV")->required();
  evaluate->add_option("--seed", eva.seed, "Seed recorded in the report");
  evaluate->add_option("--out-dir", eva.out_dir, "Output directory (default evaluate)");

  ExplainOptionsCli exp;
  auto* explain = app.add_subcommand("explain", "SHAP importance and dependence tables");
  explain->add_option("--model", exp.model, "Model file")->required();
  explain->add_option("--data", exp.data, "Rows to explain")->required();
  explain->add_option("--background", exp.background, "Background CSV (default --data)");
  explain->add_option("--background-size", exp.background_size, "Background rows")
      ->check(CLI::PositiveNumber);
  explain->add_option("--method", exp.method, "exact or sampled");
  explain->add_option("--n-permutations", exp.n_permutations, "Permutations (sampled)")
      ->check(CLI::PositiveNumber);
  explain->add_option("--max-rows", exp.max_rows, "Explain only the first N rows (0 = all)")
      ->check(CLI::NonNegativeNumber);
  explain->add_option("--seed", exp.seed, "Seed");
  explain->add_option("--out-dir", exp.out_dir, "Output directory (default explain)");

  std::string manifest_path;
  auto* rerun = app.add_subcommand("rerun", "Repeat a run from its manifest and verify outputs");
  rerun->add_option("--manifest", manifest_path, "manifest.json")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  SetNumThreads(threads);
  try {
    if (*generate) return RunGenerate(gen);
    if (*split) return RunSplit(spl);
    if (*fit_cmd) return RunFit(fit);
    if (*select) return RunSelect(sel);
    if (*tune) return RunTune(tun);
    if (*evaluate) return RunEvaluate(eva);
    if (*explain) return RunExplain(exp);
    if (*rerun) return RunRerun(manifest_path);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace
}  // namespace hdm::cli

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hdm::cli::Run(args);
}
