#pragma once

#include <stdexcept>
#include <string>

namespace tomsyn {

// Process exit codes used by the CLI. Library code throws the matching
// exception type; main() translates.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitInsufficientInput = 2,
  kExitDataIntegrity = 3,
  kExitNumerical = 4,
};

class Error : public std::runtime_error {
 public:
  Error(std::string msg, int exit_code)
      : std::runtime_error(std::move(msg)), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

// Bad flags, malformed arguments.
struct UsageError : Error {
  explicit UsageError(std::string msg) : Error(std::move(msg), kExitUsage) {}
};

// Empty or missing prerequisite input (dataset, checkpoint, results).
struct InputError : Error {
  explicit InputError(std::string msg)
      : Error(std::move(msg), kExitInsufficientInput) {}
};

// Corrupt or inconsistent on-disk data: bad magic, checksum mismatch,
// violated structural invariants.
struct IntegrityError : Error {
  explicit IntegrityError(std::string msg)
      : Error(std::move(msg), kExitDataIntegrity) {}
};

// Numerical failure: NaN loss, zero-mass belief, impossible observation.
struct NumericalError : Error {
  explicit NumericalError(std::string msg)
      : Error(std::move(msg), kExitNumerical) {}
};

}  // namespace tomsyn
