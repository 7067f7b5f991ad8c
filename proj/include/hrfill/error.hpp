#pragma once

#include <stdexcept>
#include <string>

namespace hrfill {

/// Base class for all library failures. The CLI maps each subclass to an
/// exit code (usage 1, data 2, numeric 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments, bad configuration, or a call that violates a precondition.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Input data that cannot be used: unreadable files, schema mismatches,
/// too few rows, degenerate series.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed: singular systems, solver non-convergence.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace hrfill
