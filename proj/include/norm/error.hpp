#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace norm {

enum class ErrorKind {
  ParseError,
  DegenerateCell,
  IndexOutOfRange,
  UnsupportedCellKind,
  DimensionMismatch,
  ConvergenceFailure,
  RankDeficient,
  TooFewSnapshots,
  InvalidModeCount,
  ZeroEigenvalue,
  DomainMismatch,
  InvalidSpec,
  ZeroTarget,
  EmptyBatch,
  ShapeMismatch,
  ZeroVariance,
  NonFiniteLoss,
  NonPositiveCoefficient,
  SingularSystem,
  BoundaryNotFound,
  FormatVersion,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Every recoverable failure in the library is reported as a norm::Error
// carrying a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace norm
