#include "hdm/normal.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "hdm/common.hpp"

namespace hdm {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

double NormalPdf(double z) {
  if (std::isinf(z)) return 0.0;
  return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

double NormalCdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double NormalSurvival(double z) { return 0.5 * std::erfc(z * kInvSqrt2); }

double NormalQuantile(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvalidArgument("NormalQuantile: probability outside [0, 1]");
  }
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double NormalIntervalProbability(double lower, double upper) {
  if (!(upper > lower)) return 0.0;
  // In the right tail Phi(upper) - Phi(lower) cancels catastrophically; the
  // mirrored survival difference does not.
  if (lower > 0.0) return NormalSurvival(lower) - NormalSurvival(upper);
  return NormalCdf(upper) - NormalCdf(lower);
}

}  // namespace hdm
