#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nscrit {

/// Failure categories shared by every module.
enum class ErrorKind {
  InvalidArgument,
  PointOutsideDomain,
  UnstablePair,
  SingularSystem,
  ConvergenceFailure,
  NumericData,
  IncompatibleMesh,
  InvalidState,
  Usage,
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by the iterative saddle backend; keeps the residual history.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> history)
      : Error(ErrorKind::ConvergenceFailure, what), history_(std::move(history)) {}

  const std::vector<double>& residual_history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::PointOutsideDomain: return "point-outside-domain";
    case ErrorKind::UnstablePair: return "unstable-pair";
    case ErrorKind::SingularSystem: return "singular-system";
    case ErrorKind::ConvergenceFailure: return "convergence-failure";
    case ErrorKind::NumericData: return "numeric-data";
    case ErrorKind::IncompatibleMesh: return "incompatible-mesh";
    case ErrorKind::InvalidState: return "invalid-state";
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace nscrit
