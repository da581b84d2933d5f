#ifndef ALGOTHERMO_ERRORS_HPP
#define ALGOTHERMO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace algothermo {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Requested work exceeds a configured hard limit.
struct CapError : Error {
  using Error::Error;
};

// Parameters outside the region where enclosures are certified.
struct RegionError : Error {
  using Error::Error;
};

// Ill-conditioned linear system; carries the observed condition number.
struct ConditionError : Error {
  ConditionError(const std::string& what, double cond)
      : Error(what), condition(cond) {}
  double condition;
};

// Iterative solve failed to converge.
struct ConvergenceError : Error {
  using Error::Error;
};

// Malformed corpus or loop-spec file; line is 1-based.
struct FileFormatError : Error {
  FileFormatError(const std::string& what, int line_number)
      : Error(what + " (line " + std::to_string(line_number) + ")"),
        line(line_number) {}
  int line;
};

}  // namespace algothermo

#endif  // ALGOTHERMO_ERRORS_HPP
