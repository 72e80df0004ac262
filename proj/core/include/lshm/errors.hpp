#pragma once

#include <stdexcept>
#include <string>

namespace lshm {

// Shape disagreements between parameters, covariate rows, and datasets.
class dimension_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent input data (CSV problems, empty datasets,
// double normalization, invalid stochastic matrices).
class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Computation left the representable range: an exponent beyond +-700, or a
// terminal hazard so small that 1 - exp(-lambda) has no precision left.
// Raised instead of clamping so callers never see silently saturated values.
class numeric_range_error : public std::range_error {
 public:
  using std::range_error::range_error;
};

}  // namespace lshm
