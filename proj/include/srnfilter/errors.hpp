#pragma once

#include <stdexcept>
#include <string>

namespace srnfilter {

enum class ErrorKind {
  EmptyMatch,
  ExplosionGuard,
  TableGap,
  SizeCap,
  StepUnstable,
  ZeroMass,
  Degenerate,
  AllUnreliable,
  MissingTable,
  UnknownModel,
  BadParam,
  InvalidModel,
  InconsistentObservation,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` distinguishes the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// CLI exit code: 2 usage, 3 numerical failure, 4 degenerate filter.
  int exit_code() const noexcept;

 private:
  ErrorKind kind_;
};

}  // namespace srnfilter
