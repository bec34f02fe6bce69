#ifndef LOGLIN_ERROR_HPP
#define LOGLIN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace loglin {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnknownLevel : Error {
  UnknownLevel(const std::string &label, const std::string &variable,
               std::size_t row = 0)
      : Error("unknown level '" + label + "' for variable '" + variable +
              "' (row " + std::to_string(row) + ")") {}
};

struct RowArityMismatch : Error {
  RowArityMismatch(std::size_t row, std::size_t got, std::size_t expected)
      : Error("row " + std::to_string(row) + " has " + std::to_string(got) +
              " entries, expected " + std::to_string(expected)) {}
};

struct TargetInfeasible : Error {
  using Error::Error;
};

struct EnumerationRequired : Error {
  using Error::Error;
};

struct ZeroSample : Error {
  using Error::Error;
};

struct Overflow : Error {
  using Error::Error;
};

struct NonFiniteLikelihood : Error {
  using Error::Error;
};

struct NonFiniteScore : Error {
  using Error::Error;
};

struct SingularSystem : Error {
  using Error::Error;
};

struct SingularInformation : Error {
  using Error::Error;
};

struct Diverged : Error {
  using Error::Error;
};

struct DegenerateTruth : Error {
  using Error::Error;
};

struct InvalidSpec : Error {
  using Error::Error;
};

} // namespace loglin

#endif
