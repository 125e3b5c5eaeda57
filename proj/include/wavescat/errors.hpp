#pragma once

#include <stdexcept>
#include <string>

namespace wavescat {

// Exception hierarchy; the CLI maps each kind to a stable exit code.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad arguments or configuration (exit code 2).
class ConfigError : public Error {
public:
  using Error::Error;
};

// Malformed or inconsistent input data (exit code 3).
class DataError : public Error {
public:
  using Error::Error;
};

// Numerical failure such as a diverging optimizer (exit code 4).
class NumericalError : public Error {
public:
  using Error::Error;
};

} // namespace wavescat
