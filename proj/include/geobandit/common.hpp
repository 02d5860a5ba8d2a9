#pragma once

#include <stdexcept>
#include <string>

namespace geobandit {

// Failures are thrown, never silently repaired. ContractError covers bad call
// arguments (mismatched manifolds, empty inputs); SpecError covers invalid
// model parameters; SingularModelError is raised when the jitter ladder is
// exhausted; ConfigError/IoError cover the harness surface.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ContractError : Error {
  using Error::Error;
};
struct SpecError : Error {
  using Error::Error;
};
struct SingularModelError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

inline constexpr double kTwoPi = 6.2831853071795864769;
inline constexpr double kPi = 3.1415926535897932385;

}  // namespace geobandit
