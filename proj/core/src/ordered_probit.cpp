#include "hdm/ordered_probit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "hdm/normal.hpp"
#include "hdm/optimizer.hpp"
#include "hdm/summation.hpp"
#include "hdm/text_io.hpp"

namespace hdm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void CheckDimension(std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw InvalidArgument(fmt::format(
        "dimension mismatch: model has {} features, input has {}", expected,
        got));
  }
}

// Per-row pieces of the log-likelihood and its derivatives for an observed
// label y with linear index eta. a and b are the upper and lower latent
// bounds; u = phi(a)/P and w = phi(b)/P.
struct RowTerms {
  double log_p = 0.0;
  double a = kInf;
  double b = -kInf;
  double u = 0.0;
  double w = 0.0;
};

RowTerms EvaluateRow(const Thresholds& tau, double eta, int y) {
  RowTerms t;
  if (y < kNumThresholds) t.a = tau[y] - eta;
  if (y > 0) t.b = tau[y - 1] - eta;
  const double p = std::max(NormalIntervalProbability(t.b, t.a), kProbabilityFloor);
  t.log_p = std::log(p);
  t.u = NormalPdf(t.a) / p;
  t.w = NormalPdf(t.b) / p;
  return t;
}

// x * phi(x) with the infinite limits mapped to 0.
double TimesDensity(double x, double ratio) {
  return std::isinf(x) ? 0.0 : x * ratio;
}

void CheckData(const OrderedProbitParams& params, const Dataset& data) {
  CheckDimension(params.beta.size(), data.n_features());
}

Eigen::VectorXd ToUnconstrained(const OrderedProbitParams& params) {
  const std::size_t p = params.beta.size();
  Eigen::VectorXd theta(p + kNumThresholds);
  for (std::size_t j = 0; j < p; ++j) theta[j] = params.beta[j];
  theta[p] = params.thresholds[0];
  for (int k = 1; k < kNumThresholds; ++k) {
    theta[p + k] = std::log(params.thresholds[k] - params.thresholds[k - 1]);
  }
  return theta;
}

OrderedProbitParams FromUnconstrained(const Eigen::VectorXd& theta,
                                      std::size_t p) {
  OrderedProbitParams params;
  params.beta.assign(theta.data(), theta.data() + p);
  params.thresholds[0] = theta[p];
  for (int k = 1; k < kNumThresholds; ++k) {
    params.thresholds[k] = params.thresholds[k - 1] + std::exp(theta[p + k]);
  }
  return params;
}

bool StrictlyIncreasing(const Thresholds& tau) {
  for (int k = 0; k < kNumThresholds; ++k) {
    if (!std::isfinite(tau[k]) || (k > 0 && !(tau[k] > tau[k - 1]))) return false;
  }
  return true;
}

// d tau / d theta (5x5 block; beta block is the identity).
Eigen::MatrixXd ThresholdJacobian(const Eigen::VectorXd& theta, std::size_t p) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(p + kNumThresholds, p + kNumThresholds);
  jac.topLeftCorner(p, p).setIdentity();
  for (int j = 0; j < kNumThresholds; ++j) {
    jac(p + j, p) = 1.0;
    for (int k = 1; k <= j; ++k) jac(p + j, p + k) = std::exp(theta[p + k]);
  }
  return jac;
}

std::string JoinExact(const std::vector<double>& values) {
  std::vector<std::string> parts;
  parts.reserve(values.size());
  for (double v : values) parts.push_back(FormatExact(v));
  return JoinStrings(parts, ",");
}

}  // namespace

void OrderedProbitParams::Validate() const {
  for (double b : beta) {
    if (!std::isfinite(b)) throw InvalidArgument("non-finite coefficient");
  }
  for (int k = 0; k < kNumThresholds; ++k) {
    if (!std::isfinite(thresholds[k])) throw InvalidArgument("non-finite threshold");
    if (k > 0 && !(thresholds[k] > thresholds[k - 1])) {
      throw InvalidArgument("thresholds must be strictly increasing");
    }
  }
}

Eigen::VectorXd OrderedProbitParams::Pack() const {
  Eigen::VectorXd out(n_params());
  for (std::size_t j = 0; j < beta.size(); ++j) out[j] = beta[j];
  for (int k = 0; k < kNumThresholds; ++k) out[beta.size() + k] = thresholds[k];
  return out;
}

OrderedProbitParams OrderedProbitParams::Unpack(const Eigen::VectorXd& packed,
                                                std::size_t n_features) {
  CheckDimension(n_features + kNumThresholds, static_cast<std::size_t>(packed.size()));
  OrderedProbitParams params;
  params.beta.assign(packed.data(), packed.data() + n_features);
  for (int k = 0; k < kNumThresholds; ++k) params.thresholds[k] = packed[n_features + k];
  return params;
}

double OrderedProbitParams::LinearIndex(std::span<const double> x) const {
  CheckDimension(beta.size(), x.size());
  double eta = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) eta += beta[j] * x[j];
  return eta;
}

ClassVector ClassProbabilities(const OrderedProbitParams& params,
                               std::span<const double> x) {
  const double eta = params.LinearIndex(x);
  ClassVector probs{};
  double lower = -kInf;
  for (int c = 0; c < kNumClasses; ++c) {
    const double upper = c < kNumThresholds ? params.thresholds[c] - eta : kInf;
    probs[c] = NormalIntervalProbability(lower, upper);
    lower = upper;
  }
  return probs;
}

double LogLikelihood(const OrderedProbitParams& params, const Dataset& data) {
  CheckData(params, data);
  CompensatedSum sum;
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    sum += EvaluateRow(params.thresholds, params.LinearIndex(data.row(i)),
                       data.label(i))
               .log_p;
  }
  return sum.value();
}

Eigen::VectorXd Score(const OrderedProbitParams& params, const Dataset& data) {
  CheckData(params, data);
  const std::size_t p = params.beta.size();
  std::vector<CompensatedSum> sums(p + kNumThresholds);
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    const auto x = data.row(i);
    const int y = data.label(i);
    const RowTerms t = EvaluateRow(params.thresholds, params.LinearIndex(x), y);
    const double d_eta = -(t.u - t.w);
    for (std::size_t j = 0; j < p; ++j) sums[j] += d_eta * x[j];
    if (y < kNumThresholds) sums[p + y] += t.u;
    if (y > 0) sums[p + y - 1] += -t.w;
  }
  Eigen::VectorXd g(p + kNumThresholds);
  for (std::size_t k = 0; k < sums.size(); ++k) g[k] = sums[k].value();
  return g;
}

Eigen::MatrixXd LogLikelihoodHessian(const OrderedProbitParams& params,
                                     const Dataset& data) {
  CheckData(params, data);
  const std::size_t p = params.beta.size();
  const std::size_t m = p + kNumThresholds;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd da(m);
  Eigen::VectorXd db(m);
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    const auto x = data.row(i);
    const int y = data.label(i);
    const RowTerms t = EvaluateRow(params.thresholds, params.LinearIndex(x), y);
    const double l_aa = -TimesDensity(t.a, t.u) - t.u * t.u;
    const double l_bb = TimesDensity(t.b, t.w) - t.w * t.w;
    const double l_ab = t.u * t.w;
    da.setZero();
    db.setZero();
    for (std::size_t j = 0; j < p; ++j) {
      da[j] = -x[j];
      db[j] = -x[j];
    }
    if (y < kNumThresholds) da[p + y] = 1.0;
    if (y > 0) db[p + y - 1] = 1.0;
    // Terms for an infinite bound vanish (u or w is zero there).
    h.noalias() += l_aa * (da * da.transpose()) + l_bb * (db * db.transpose()) +
                   l_ab * (da * db.transpose() + db * da.transpose());
  }
  return h;
}

Thresholds NullThresholds(std::span<const int> labels) {
  if (labels.empty()) throw InvalidArgument("no labels");
  const ClassVector counts = ClassCounts(labels);
  const double n = static_cast<double>(labels.size());
  const double lo = 0.5 / n;
  Thresholds tau{};
  double cumulative = 0.0;
  for (int k = 0; k < kNumThresholds; ++k) {
    cumulative += counts[k];
    tau[k] = NormalQuantile(std::clamp(cumulative / n, lo, 1.0 - lo));
  }
  // Empty classes collapse adjacent cut points; keep them strictly ordered.
  for (int k = 1; k < kNumThresholds; ++k) {
    tau[k] = std::max(tau[k], tau[k - 1] + 1e-3);
  }
  return tau;
}

double NullLogLikelihood(std::span<const int> labels) {
  if (labels.empty()) throw InvalidArgument("no labels");
  const ClassVector counts = ClassCounts(labels);
  const double n = static_cast<double>(labels.size());
  CompensatedSum sum;
  for (double c : counts) {
    if (c > 0.0) sum += c * std::log(c / n);
  }
  return sum.value();
}

double McFaddenR2(double log_likelihood, double log_likelihood_null) {
  return 1.0 - log_likelihood / log_likelihood_null;
}

double Aic(double log_likelihood, int n_parameters) {
  return -2.0 * (log_likelihood - n_parameters);
}

OrderedProbitFit FitOrderedProbit(const Dataset& input,
                                  std::span<const std::string> feature_names,
                                  const OrderedProbitOptions& options) {
  const Dataset data = input.SelectFeatures(feature_names);
  const std::size_t p = data.n_features();
  const std::size_t n = data.n_rows();
  const std::set<int> distinct(data.labels().begin(), data.labels().end());
  if (distinct.size() < 2) {
    throw InvalidArgument("ordered probit needs at least two distinct labels");
  }
  if (n <= p + kNumThresholds) {
    throw InvalidArgument(fmt::format(
        "ordered probit needs n > p + 5 (n = {}, p = {})", n, p));
  }
  if (options.max_iterations < 0 || !(options.tolerance > 0.0)) {
    throw InvalidArgument("invalid optimizer options");
  }

  OrderedProbitFit fit;
  fit.feature_names.assign(feature_names.begin(), feature_names.end());
  fit.n_observations = n;
  fit.null_thresholds = NullThresholds(data.labels());
  fit.log_likelihood_null = NullLogLikelihood(data.labels());

  OrderedProbitParams start;
  start.beta.assign(p, 0.0);
  start.thresholds = fit.null_thresholds;

  const Objective objective = [&](const Eigen::VectorXd& theta,
                                  Eigen::VectorXd& grad) {
    const OrderedProbitParams params = FromUnconstrained(theta, p);
    // Under separation the cut points can drift until an increment is lost to
    // rounding; such trial points are rejected by the line search.
    if (!StrictlyIncreasing(params.thresholds) || !theta.allFinite()) {
      grad.setZero();
      return std::numeric_limits<double>::infinity();
    }
    const Eigen::VectorXd score = Score(params, data);
    grad = -(ThresholdJacobian(theta, p).transpose() * score);
    return -LogLikelihood(params, data);
  };
  // Max-norm of the score in (beta, tau), recovered from the theta gradient
  // by inverting the (triangular) threshold Jacobian.
  const ConvergenceMeasure measure = [&](const Eigen::VectorXd& theta,
                                         const Eigen::VectorXd& grad) {
    const Eigen::MatrixXd jac = ThresholdJacobian(theta, p);
    const Eigen::VectorXd score =
        jac.transpose().triangularView<Eigen::Upper>().solve(-grad);
    return score.cwiseAbs().maxCoeff();
  };

  Eigen::VectorXd theta0 = ToUnconstrained(start);
  std::optional<Eigen::MatrixXd> initial_inverse;
  {
    const Eigen::MatrixXd jac = ThresholdJacobian(theta0, p);
    const Eigen::MatrixXd neg_h =
        -(jac.transpose() * LogLikelihoodHessian(start, data) * jac);
    Eigen::LLT<Eigen::MatrixXd> llt(neg_h);
    if (llt.info() == Eigen::Success) {
      initial_inverse = llt.solve(Eigen::MatrixXd::Identity(neg_h.rows(), neg_h.cols()));
    }
  }

  BfgsOptions bfgs;
  bfgs.max_iterations = options.max_iterations;
  bfgs.tolerance = options.tolerance;
  const BfgsResult result =
      MinimizeBfgs(objective, std::move(theta0), bfgs, measure, initial_inverse);

  fit.params = FromUnconstrained(result.x, p);
  fit.converged = result.converged;
  fit.iterations = result.iterations;
  fit.gradient_max_norm = result.convergence_measure;
  fit.message = result.message;
  fit.log_likelihood_full = LogLikelihood(fit.params, data);
  for (double v : result.value_history) fit.log_likelihood_trace.push_back(-v);
  fit.mcfadden_r2 = McFaddenR2(fit.log_likelihood_full, fit.log_likelihood_null);
  fit.aic_full = Aic(fit.log_likelihood_full, fit.n_parameters());
  fit.aic_null = Aic(fit.log_likelihood_null, kNumThresholds);

  const std::size_t m = fit.params.n_params();
  fit.standard_errors.assign(m, std::numeric_limits<double>::quiet_NaN());
  fit.t_values.assign(m, std::numeric_limits<double>::quiet_NaN());
  const Eigen::MatrixXd neg_h = -LogLikelihoodHessian(fit.params, data);
  Eigen::LLT<Eigen::MatrixXd> llt(neg_h);
  if (llt.info() == Eigen::Success) {
    Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(m, m));
    cov = 0.5 * (cov + cov.transpose());
    if (cov.allFinite() && (cov.diagonal().array() >= 0.0).all()) {
      const Eigen::VectorXd est = fit.params.Pack();
      for (std::size_t k = 0; k < m; ++k) {
        fit.standard_errors[k] = std::sqrt(cov(k, k));
        fit.t_values[k] = est[k] / fit.standard_errors[k];
      }
      fit.covariance = std::move(cov);
    }
  }
  if (!fit.covariance) {
    fit.message += fit.message.empty() ? "" : "; ";
    fit.message += "singular Hessian, covariance omitted";
  }
  return fit;
}

int PredictClass(const OrderedProbitFit& fit, std::span<const double> x) {
  return ArgMax(ClassProbabilities(fit.params, x));
}

ClassVector ExpectedClassShares(const OrderedProbitFit& fit, const Dataset& data) {
  const Dataset aligned = data.SelectFeatures(fit.feature_names);
  std::array<CompensatedSum, kNumClasses> sums;
  for (std::size_t i = 0; i < aligned.n_rows(); ++i) {
    const ClassVector probs = ClassProbabilities(fit.params, aligned.row(i));
    for (int c = 0; c < kNumClasses; ++c) sums[c] += probs[c];
  }
  ClassVector shares{};
  const double n = static_cast<double>(aligned.n_rows());
  for (int c = 0; c < kNumClasses; ++c) shares[c] = sums[c].value() / n;
  return shares;
}

Eigen::MatrixXd MarginalEffects(const OrderedProbitParams& params,
                                std::span<const double> x) {
  const double eta = params.LinearIndex(x);
  const std::size_t p = params.beta.size();
  // density at each cut point; the outer bounds contribute 0.
  std::array<double, kNumClasses + 1> density{};
  for (int k = 0; k < kNumThresholds; ++k) {
    density[k + 1] = NormalPdf(params.thresholds[k] - eta);
  }
  Eigen::MatrixXd effects(kNumClasses, p);
  for (int c = 0; c < kNumClasses; ++c) {
    const double scale = density[c] - density[c + 1];
    for (std::size_t j = 0; j < p; ++j) effects(c, j) = scale * params.beta[j];
  }
  return effects;
}

std::string FormatFitReport(const OrderedProbitFit& fit) {
  std::string out;
  out += "Ordered probit weekly home delivery frequency model\n\n";
  out += fmt::format("{:<34} {:>10} {:>10}\n", "Attribute", "Estimate", "t-value");
  const std::size_t p = fit.params.beta.size();
  const auto t_text = [&](std::size_t k) {
    return std::isnan(fit.t_values[k]) ? std::string("n/a")
                                       : fmt::format("{:.2f}", fit.t_values[k]);
  };
  for (std::size_t j = 0; j < p; ++j) {
    out += fmt::format("{:<34} {:>10.2f} {:>10}\n", fit.feature_names[j],
                       fit.params.beta[j], t_text(j));
  }
  out += "Thresholds\n";
  const char* kThresholdLabels[kNumThresholds] = {"0 1", "1 2", "2 3", "3 4", "4 5+"};
  for (int k = 0; k < kNumThresholds; ++k) {
    out += fmt::format("{:<34} {:>10.2f} {:>10}\n", kThresholdLabels[k],
                       fit.params.thresholds[k], t_text(p + k));
  }
  out += '\n';
  out += fmt::format("{:<34} {:>10.1f}\n", "Log likelihood (full)", fit.log_likelihood_full);
  out += fmt::format("{:<34} {:>10.1f}\n", "Log likelihood (null)", fit.log_likelihood_null);
  out += fmt::format("{:<34} {:>10.2f}\n", "McFadden's R^2", fit.mcfadden_r2);
  out += fmt::format("{:<34} {:>10.1f}\n", "AIC (full)", fit.aic_full);
  out += fmt::format("{:<34} {:>10.1f}\n", "AIC (null)", fit.aic_null);
  out += fmt::format("{:<34} {:>10}\n", "Observations", fit.n_observations);
  out += fmt::format("{:<34} {:>10}\n", "Parameters (k)", fit.n_parameters());
  out += fmt::format("{:<34} {:>10}\n", "Converged", fit.converged ? "yes" : "no");
  out += fmt::format("{:<34} {:>10}\n", "Iterations", fit.iterations);
  out += fmt::format("{:<34} {:>10.3g}\n", "Gradient max-norm", fit.gradient_max_norm);
  if (!fit.message.empty()) out += "Note: " + fit.message + '\n';
  out += "\nMcFadden's R^2 = 1 - LL/LL_null; AIC = -2(LL - k).\n";
  out += "\n[full_precision]\n";
  out += "log_likelihood_full = " + FormatExact(fit.log_likelihood_full) + '\n';
  out += "log_likelihood_null = " + FormatExact(fit.log_likelihood_null) + '\n';
  out += "mcfadden_r2 = " + FormatExact(fit.mcfadden_r2) + '\n';
  out += "aic_full = " + FormatExact(fit.aic_full) + '\n';
  out += "aic_null = " + FormatExact(fit.aic_null) + '\n';
  out += fmt::format("converged = {}\n", fit.converged ? "true" : "false");
  return out;
}

std::string SerializeFit(const OrderedProbitFit& fit) {
  KvConfig kv;
  kv.Set("model", "ordered_probit");
  kv.Set("features", JoinStrings(fit.feature_names, ","));
  kv.Set("beta", JoinExact(fit.params.beta));
  kv.Set("thresholds", JoinExact({fit.params.thresholds.begin(), fit.params.thresholds.end()}));
  kv.Set("null_thresholds",
         JoinExact({fit.null_thresholds.begin(), fit.null_thresholds.end()}));
  kv.Set("standard_errors", JoinExact(fit.standard_errors));
  kv.Set("t_values", JoinExact(fit.t_values));
  if (fit.covariance) {
    const Eigen::MatrixXd& cov = *fit.covariance;
    std::vector<double> flat;
    for (Eigen::Index r = 0; r < cov.rows(); ++r) {
      for (Eigen::Index c = 0; c < cov.cols(); ++c) flat.push_back(cov(r, c));
    }
    kv.Set("covariance", JoinExact(flat));
  }
  kv.Set("log_likelihood_full", FormatExact(fit.log_likelihood_full));
  kv.Set("log_likelihood_null", FormatExact(fit.log_likelihood_null));
  kv.Set("mcfadden_r2", FormatExact(fit.mcfadden_r2));
  kv.Set("aic_full", FormatExact(fit.aic_full));
  kv.Set("aic_null", FormatExact(fit.aic_null));
  kv.Set("n_parameters", std::to_string(fit.n_parameters()));
  kv.Set("n_observations", std::to_string(fit.n_observations));
  kv.Set("converged", fit.converged ? "true" : "false");
  kv.Set("iterations", std::to_string(fit.iterations));
  kv.Set("gradient_max_norm", FormatExact(fit.gradient_max_norm));
  return kv.Serialize();
}

OrderedProbitFit ParseFit(const KvConfig& kv) {
  if (kv.GetString("model") != "ordered_probit") {
    throw DataError("not an ordered probit model file");
  }
  OrderedProbitFit fit;
  const std::string features = kv.GetString("features");
  if (!features.empty()) fit.feature_names = SplitString(features, ',');
  fit.params.beta = kv.GetDoubleList("beta");
  if (fit.params.beta.size() != fit.feature_names.size()) {
    throw DataError("beta length does not match feature list");
  }
  const auto read_thresholds = [&](std::string_view key, Thresholds& out) {
    const auto values = kv.GetDoubleList(key);
    if (values.size() != kNumThresholds) {
      throw DataError(std::string(key) + ": expected 5 values");
    }
    std::copy(values.begin(), values.end(), out.begin());
  };
  read_thresholds("thresholds", fit.params.thresholds);
  read_thresholds("null_thresholds", fit.null_thresholds);
  try {
    fit.params.Validate();
  } catch (const InvalidArgument& e) {
    throw DataError(e.what());
  }
  const std::size_t m = fit.params.n_params();
  fit.standard_errors = kv.GetDoubleList("standard_errors");
  fit.t_values = kv.GetDoubleList("t_values");
  if (fit.standard_errors.size() != m || fit.t_values.size() != m) {
    throw DataError("standard_errors/t_values length mismatch");
  }
  if (kv.Find("covariance") != nullptr) {
    const auto flat = kv.GetDoubleList("covariance");
    if (flat.size() != m * m) throw DataError("covariance has the wrong size");
    Eigen::MatrixXd cov(m, m);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < m; ++c) cov(r, c) = flat[r * m + c];
    }
    fit.covariance = std::move(cov);
  }
  fit.log_likelihood_full = kv.GetDouble("log_likelihood_full");
  fit.log_likelihood_null = kv.GetDouble("log_likelihood_null");
  fit.mcfadden_r2 = kv.GetDouble("mcfadden_r2");
  fit.aic_full = kv.GetDouble("aic_full");
  fit.aic_null = kv.GetDouble("aic_null");
  fit.n_observations = static_cast<std::size_t>(kv.GetInt("n_observations"));
  fit.converged = kv.GetString("converged") == "true";
  fit.iterations = static_cast<int>(kv.GetInt("iterations"));
  fit.gradient_max_norm = kv.GetDouble("gradient_max_norm");
  return fit;
}

}  // namespace hdm
