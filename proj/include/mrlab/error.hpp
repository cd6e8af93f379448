#pragma once

#include <stdexcept>
#include <string>

namespace mrlab {

/// Invalid parameters or inconsistent inputs.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative solver stopped before reaching its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A discretization failed one of its internal consistency checks
/// (mass balance, probability sums).
class DiscretizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A persisted artifact is absent, truncated or fails its checksum.
class MissingArtifact : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mrlab
