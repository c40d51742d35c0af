#pragma once

#include <stdexcept>
#include <string>

namespace protac {

/// Base class for all library errors.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad inputs: violated preconditions, malformed configs or files.
struct validation_error : error {
  using error::error;
};

/// Numerical failures: non-convergence, degenerate geometry, singular systems.
struct numerical_error : error {
  using error::error;
};

}  // namespace protac
