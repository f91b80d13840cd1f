#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hdm/common.hpp"
#include "hdm/data_model.hpp"
#include "hdm/kv_config.hpp"

namespace hdm {

using Thresholds = std::array<double, kNumThresholds>;

// Coefficients and the five cut points separating the six ordered classes.
// There is no intercept: location is carried by the thresholds.
struct OrderedProbitParams {
  std::vector<double> beta;
  Thresholds thresholds{};

  // Throws InvalidArgument unless every entry is finite and the thresholds
  // are strictly increasing.
  void Validate() const;
  std::size_t n_params() const { return beta.size() + kNumThresholds; }

  // (beta..., tau_0..tau_4)
  Eigen::VectorXd Pack() const;
  static OrderedProbitParams Unpack(const Eigen::VectorXd& packed,
                                    std::size_t n_features);

  double LinearIndex(std::span<const double> x) const;
};

// P(y = c | x) for c = 0..5. Throws InvalidArgument on a dimension mismatch.
ClassVector ClassProbabilities(const OrderedProbitParams& params,
                               std::span<const double> x);

// Sum of log P(y_i | x_i). Interval probabilities are floored at 1e-300, so
// the result is always finite. `data` columns are used in order and must
// match params.beta.
double LogLikelihood(const OrderedProbitParams& params, const Dataset& data);

// Analytic gradient of LogLikelihood over (beta, tau).
Eigen::VectorXd Score(const OrderedProbitParams& params, const Dataset& data);

// Analytic Hessian of LogLikelihood over (beta, tau).
Eigen::MatrixXd LogLikelihoodHessian(const OrderedProbitParams& params,
                                     const Dataset& data);

// Thresholds-only model: cut points at the inverse normal CDF of cumulative
// class shares (shares clamped to [0.5/n, 1 - 0.5/n] so empty classes stay
// finite). This is the null-model optimum whenever every class occurs.
Thresholds NullThresholds(std::span<const int> labels);
// Sum_c n_c log(n_c / n), the null-model maximum.
double NullLogLikelihood(std::span<const int> labels);

double McFaddenR2(double log_likelihood, double log_likelihood_null);
double Aic(double log_likelihood, int n_parameters);

struct OrderedProbitOptions {
  int max_iterations = 200;
  double tolerance = 1e-6;
  // Kept for interface symmetry with the tree models; estimation is
  // deterministic.
  std::uint64_t seed = 0;
};

struct OrderedProbitFit {
  std::vector<std::string> feature_names;
  OrderedProbitParams params;
  // (p+5)x(p+5) inverse negative Hessian; absent when the Hessian is singular.
  std::optional<Eigen::MatrixXd> covariance;
  // NaN when the covariance is absent.
  std::vector<double> standard_errors;
  std::vector<double> t_values;
  double log_likelihood_full = 0.0;
  double log_likelihood_null = 0.0;
  double mcfadden_r2 = 0.0;
  double aic_full = 0.0;
  double aic_null = 0.0;
  Thresholds null_thresholds{};
  bool converged = false;
  int iterations = 0;
  double gradient_max_norm = 0.0;
  std::size_t n_observations = 0;
  std::string message;
  // Log-likelihood after every accepted optimizer step.
  std::vector<double> log_likelihood_trace;

  int n_parameters() const {
    return static_cast<int>(params.n_params());
  }
};

// Maximum likelihood over the unconstrained parameterization
// (beta, tau_0, log(tau_1 - tau_0), ..., log(tau_4 - tau_3)) by BFGS, started
// from beta = 0 and the null thresholds. `converged` is true iff the max-norm
// of Score in (beta, tau) falls below options.tolerance within
// options.max_iterations.
//
// Throws InvalidArgument when fewer than two distinct labels are present or
// n <= p + 5.
OrderedProbitFit FitOrderedProbit(const Dataset& data,
                                  std::span<const std::string> feature_names,
                                  const OrderedProbitOptions& options = {});

// Argmax of ClassProbabilities; ties go to the lowest class.
int PredictClass(const OrderedProbitFit& fit, std::span<const double> x);

// Mean predicted class distribution over the rows of `data`, whose columns
// are matched to fit.feature_names by name.
ClassVector ExpectedClassShares(const OrderedProbitFit& fit, const Dataset& data);

// 6 x p matrix of dP(y = c | x) / dx_j.
Eigen::MatrixXd MarginalEffects(const OrderedProbitParams& params,
                                std::span<const double> x);

// Human-readable estimates table with thresholds and fit statistics.
std::string FormatFitReport(const OrderedProbitFit& fit);
// key=value dump with full precision; ParseFit reads it back.
std::string SerializeFit(const OrderedProbitFit& fit);
OrderedProbitFit ParseFit(const KvConfig& config);

}  // namespace hdm
