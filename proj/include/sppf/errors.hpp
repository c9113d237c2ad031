#pragma once

#include <stdexcept>
#include <string>

namespace sppf {

// Bad user-supplied configuration or input files.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure at runtime: divergence, loss of positive definiteness,
// non-finite state, non-convergence.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sppf
