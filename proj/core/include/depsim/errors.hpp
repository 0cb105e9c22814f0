#pragma once

#include <stdexcept>
#include <string>

namespace depsim {

// Base error for everything thrown by the library on invalid input,
// numerical non-convergence or violated runtime invariants.
// Statistical test failures are reported as data, never thrown.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : Error {
  using Error::Error;
};

// Tilting parameter outside the open admissible interval.
struct ThetaOutOfRangeError : Error {
  using Error::Error;
};

// Support extension hit its hard cap before the tail bound met tolerance.
struct TruncationError : Error {
  using Error::Error;
};

// Requested monotone coupling of measures that do not dominate.
struct DominationError : Error {
  using Error::Error;
};

// Ring too small for the requested horizon/observable window,
// or a tracked walker reached the label window edge.
struct GuardError : Error {
  using Error::Error;
};

} // namespace depsim
