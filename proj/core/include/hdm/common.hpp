#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hdm {

// Weekly home deliveries are binned into six ordered classes: 0, 1, 2, 3, 4
// and "5 or more".
inline constexpr int kNumClasses = 6;
inline constexpr int kNumThresholds = kNumClasses - 1;

using ClassVector = std::array<double, kNumClasses>;

inline constexpr bool IsValidLabel(int label) {
  return label >= 0 && label < kNumClasses;
}

// Index of the largest entry; ties go to the lowest class.
inline int ArgMax(const ClassVector& v) {
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c) {
    if (v[c] > v[best]) best = c;
  }
  return best;
}

// Base class for every error raised by the library. Messages carry enough
// location detail (row, column, parameter name) to be shown to users as-is.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Caller violated a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Seed derivation shared by every randomized component.
//
// A component seed is SplitMix64(seed XOR FNV-1a-64(tag)). Components that
// build many independent pieces (trees, folds, observations) derive one more
// level with the piece index, so the result never depends on scheduling.
std::uint64_t SplitMix64(std::uint64_t x);
std::uint64_t Fnv1a64(std::string_view bytes);
std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view tag);
std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view tag,
                         std::uint64_t index);

}  // namespace hdm
