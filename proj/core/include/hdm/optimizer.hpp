#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hdm {

// Value-and-gradient callback for minimization. Writes the gradient into
// `gradient` (already sized) and returns the objective value.
using Objective =
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& gradient)>;

// Maps (x, gradient) to the scalar compared against the tolerance. Defaults
// to the gradient max-norm.
using ConvergenceMeasure =
    std::function<double(const Eigen::VectorXd& x, const Eigen::VectorXd& gradient)>;

struct BfgsOptions {
  int max_iterations = 200;
  double tolerance = 1e-6;
  double armijo_c1 = 1e-4;
  int max_line_search_steps = 60;
};

struct BfgsResult {
  Eigen::VectorXd x;
  Eigen::VectorXd gradient;
  double value = 0.0;
  double convergence_measure = 0.0;
  int iterations = 0;
  bool converged = false;
  // Objective value after each accepted step, starting with the initial point.
  std::vector<double> value_history;
  std::string message;
};

// BFGS with a backtracking (Armijo) line search. Near the optimum the
// objective stops resolving decreases at double precision; a step whose value
// change is lost in rounding is accepted when it shrinks the gradient
// max-norm instead. `initial_inverse_hessian`, when given and positive
// definite, replaces the scaled identity as the starting approximation.
BfgsResult MinimizeBfgs(
    const Objective& objective, Eigen::VectorXd x0, const BfgsOptions& options,
    const ConvergenceMeasure& measure = {},
    const std::optional<Eigen::MatrixXd>& initial_inverse_hessian = std::nullopt);

}  // namespace hdm
