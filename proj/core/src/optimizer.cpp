#include "hdm/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hdm {

namespace {

double MaxNorm(const Eigen::VectorXd& g) {
  return g.size() == 0 ? 0.0 : g.cwiseAbs().maxCoeff();
}

bool IsPositiveDefinite(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

}  // namespace

BfgsResult MinimizeBfgs(const Objective& objective, Eigen::VectorXd x0,
                        const BfgsOptions& options,
                        const ConvergenceMeasure& measure,
                        const std::optional<Eigen::MatrixXd>& initial_inverse_hessian) {
  const Eigen::Index n = x0.size();
  const auto converge_value = [&](const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& g) {
    return measure ? measure(x, g) : MaxNorm(g);
  };

  BfgsResult result;
  result.x = std::move(x0);
  result.gradient = Eigen::VectorXd::Zero(n);
  result.value = objective(result.x, result.gradient);
  result.value_history.push_back(result.value);
  if (!std::isfinite(result.value) || !result.gradient.allFinite()) {
    result.message = "objective not finite at the starting point";
    return result;
  }

  const bool have_initial = initial_inverse_hessian &&
                            initial_inverse_hessian->rows() == n &&
                            IsPositiveDefinite(*initial_inverse_hessian);
  Eigen::MatrixXd inv_hessian =
      have_initial ? *initial_inverse_hessian : Eigen::MatrixXd::Identity(n, n);
  bool scale_identity = !have_initial;

  Eigen::VectorXd trial_x(n);
  Eigen::VectorXd trial_g(n);
  int consecutive_resets = 0;

  for (result.iterations = 0;; ++result.iterations) {
    result.convergence_measure = converge_value(result.x, result.gradient);
    if (result.convergence_measure < options.tolerance) {
      result.converged = true;
      result.message = "gradient tolerance reached";
      return result;
    }
    if (result.iterations >= options.max_iterations) {
      result.message = "iteration limit reached";
      return result;
    }

    Eigen::VectorXd direction = -inv_hessian * result.gradient;
    double slope = result.gradient.dot(direction);
    if (!(slope < 0.0)) {
      inv_hessian.setIdentity();
      scale_identity = true;
      direction = -result.gradient;
      slope = result.gradient.dot(direction);
    }

    // Backtracking line search.
    double step = 1.0;
    bool accepted = false;
    const double f0 = result.value;
    const double g0_norm = MaxNorm(result.gradient);
    const double rounding = 64.0 * std::numeric_limits<double>::epsilon() *
                            (1.0 + std::abs(f0));
    double trial_f = 0.0;
    for (int ls = 0; ls < options.max_line_search_steps; ++ls) {
      trial_x = result.x + step * direction;
      trial_f = objective(trial_x, trial_g);
      if (std::isfinite(trial_f) && trial_g.allFinite()) {
        if (trial_f <= f0 + options.armijo_c1 * step * slope) {
          accepted = true;
          break;
        }
        if (std::abs(trial_f - f0) <= rounding && MaxNorm(trial_g) < g0_norm) {
          accepted = true;
          break;
        }
        // Safeguarded quadratic interpolation of the step.
        const double denom = 2.0 * (trial_f - f0 - slope * step);
        double next = denom > 0.0 ? -slope * step * step / denom : 0.5 * step;
        step = std::clamp(next, 0.1 * step, 0.5 * step);
      } else {
        step *= 0.25;
      }
    }

    if (!accepted) {
      if (scale_identity && consecutive_resets > 0) {
        result.message = "line search failed";
        return result;
      }
      inv_hessian.setIdentity();
      scale_identity = true;
      ++consecutive_resets;
      continue;
    }
    consecutive_resets = 0;

    const Eigen::VectorXd s = trial_x - result.x;
    const Eigen::VectorXd y = trial_g - result.gradient;
    result.x = trial_x;
    result.gradient = trial_g;
    result.value = trial_f;
    result.value_history.push_back(trial_f);

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (scale_identity) {
        inv_hessian *= sy / y.squaredNorm();
        scale_identity = false;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = inv_hessian * y;
      // H+ = (I - rho s y') H (I - rho y s') + rho s s'
      inv_hessian += rho * ((1.0 + rho * y.dot(hy)) * (s * s.transpose()) -
                            (hy * s.transpose() + s * hy.transpose()));
    }
  }
}

}  // namespace hdm
