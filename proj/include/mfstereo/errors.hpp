#pragma once

#include <stdexcept>
#include <string>

namespace mfstereo {

/// Bad or missing input: unreadable files, malformed headers, violated
/// preconditions on arguments. The CLI maps it to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation produced a non-finite value (usually a parameter blow-up).
/// The CLI maps it to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mfstereo
