#pragma once

#include <stdexcept>
#include <string>

namespace viewplan {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file (bad OBJ/PLY/JSON/binary record). Message names the
// offending file and, where known, the line.
struct FormatError : Error {
  using Error::Error;
  FormatError(const std::string& path, long line, const std::string& what)
      : Error(line > 0 ? path + ":" + std::to_string(line) + ": " + what
                       : path + ": " + what) {}
};

struct ArgumentError : Error {
  using Error::Error;
};

// Problem instance exceeds a hard solver limit (e.g. tour DP state space).
struct SizeError : Error {
  using Error::Error;
};

struct InternalError : Error {
  using Error::Error;
};

}  // namespace viewplan
