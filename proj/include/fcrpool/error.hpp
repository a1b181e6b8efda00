#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fcrpool {

enum class ErrorKind {
  kDegeneratePair,
  kTooFarApart,
  kEmptyInput,
  kUnknownId,
  kShapeMismatch,
  kInfeasible,
  kBudgetExceeded,
  kEmptySample,
  kNonFiniteInput,
  kParseError,
  kDuplicateId,
  kInconsistentFamily,
  kTransportError,
  kInvalidArgument,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library. The kind is stable; the message is
/// for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fcrpool
