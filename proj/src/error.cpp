#include "fcrpool/error.hpp"

namespace fcrpool {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDegeneratePair: return "DegeneratePair";
    case ErrorKind::kTooFarApart: return "TooFarApart";
    case ErrorKind::kEmptyInput: return "EmptyInput";
    case ErrorKind::kUnknownId: return "UnknownId";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kInfeasible: return "Infeasible";
    case ErrorKind::kBudgetExceeded: return "BudgetExceeded";
    case ErrorKind::kEmptySample: return "EmptySample";
    case ErrorKind::kNonFiniteInput: return "NonFiniteInput";
    case ErrorKind::kParseError: return "ParseError";
    case ErrorKind::kDuplicateId: return "DuplicateId";
    case ErrorKind::kInconsistentFamily: return "InconsistentFamily";
    case ErrorKind::kTransportError: return "TransportError";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace fcrpool
