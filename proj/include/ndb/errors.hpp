#pragma once

#include <stdexcept>
#include <string>

namespace ndb {

// Invalid experiment or module configuration (bad sizes, non-positive scalars).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Invalid runtime input (dimension mismatch, non-finite values).
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Numerical failure (degenerate quadratic form, non-finite linear algebra).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Gradient descent produced a non-finite loss; message names the step.
struct TrainingDivergedError : NumericalError {
  explicit TrainingDivergedError(int step)
      : NumericalError("training diverged: non-finite loss at gradient step " +
                       std::to_string(step)),
        step_index(step) {}
  int step_index;
};

}  // namespace ndb
