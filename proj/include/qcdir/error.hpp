#pragma once

#include <stdexcept>
#include <string>

namespace qcdir {

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the inputs was violated (bad grid, |mu| >= 1, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// An iterative method did not reach its tolerance.
class NonConvergence : public Error {
 public:
  using Error::Error;
};

/// Failure of one stage of a solver pipeline; `stage()` names the stage.
class StageFailure : public Error {
 public:
  StageFailure(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace qcdir
