#pragma once

namespace hdm {

// Standard normal distribution helpers.
//
// NormalCdf is evaluated through erfc so both tails keep full relative
// precision; absolute error is below 1e-15 everywhere.
double NormalPdf(double z);
double NormalCdf(double z);
// Upper tail 1 - Phi(z), accurate for large z.
double NormalSurvival(double z);
double NormalQuantile(double p);

// P(lower < Z <= upper) for a standard normal Z, computed on whichever side of
// zero loses the least precision. Either bound may be infinite.
double NormalIntervalProbability(double lower, double upper);

// Floor applied to interval probabilities before taking logs.
inline constexpr double kProbabilityFloor = 1e-300;

}  // namespace hdm
