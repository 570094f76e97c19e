#pragma once

#include <stdexcept>
#include <string>

namespace stobs {

/// Invalid input, configuration or contract violation. CLI exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Inner solver failure (Newton divergence, VI stall). CLI exit code 2.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GridMismatch : ValidationError {
  GridMismatch() : ValidationError("grid mismatch: fields live on different grids") {}
};

struct NewtonDiverged : SolverError {
  explicit NewtonDiverged(const std::string& what) : SolverError(what) {}
};

struct VISolverStalled : SolverError {
  explicit VISolverStalled(const std::string& what) : SolverError(what) {}
};

}  // namespace stobs
