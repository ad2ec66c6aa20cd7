#include "srnfilter/errors.hpp"

namespace srnfilter {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::EmptyMatch: return "EmptyMatch";
    case ErrorKind::ExplosionGuard: return "ExplosionGuard";
    case ErrorKind::TableGap: return "TableGap";
    case ErrorKind::SizeCap: return "SizeCap";
    case ErrorKind::StepUnstable: return "StepUnstable";
    case ErrorKind::ZeroMass: return "ZeroMass";
    case ErrorKind::Degenerate: return "Degenerate";
    case ErrorKind::AllUnreliable: return "AllUnreliable";
    case ErrorKind::MissingTable: return "MissingTable";
    case ErrorKind::UnknownModel: return "UnknownModel";
    case ErrorKind::BadParam: return "BadParam";
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::InconsistentObservation: return "InconsistentObservation";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

int Error::exit_code() const noexcept {
  switch (kind_) {
    case ErrorKind::UnknownModel:
    case ErrorKind::BadParam:
    case ErrorKind::InvalidModel:
    case ErrorKind::Io:
      return 2;
    case ErrorKind::Degenerate:
      return 4;
    default:
      return 3;
  }
}

}  // namespace srnfilter
