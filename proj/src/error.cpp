#include "chopstick/error.hpp"

namespace chopstick {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::MissingField: return "MissingField";
    case ErrorKind::NoIntersection: return "NoIntersection";
    case ErrorKind::Disjoint: return "Disjoint";
    case ErrorKind::Contained: return "Contained";
    case ErrorKind::Concentric: return "Concentric";
    case ErrorKind::NoFeasibleSolution: return "NoFeasibleSolution";
    case ErrorKind::OutOfReach: return "OutOfReach";
    case ErrorKind::TravelExceeded: return "TravelExceeded";
    case ErrorKind::LinkageInfeasible: return "LinkageInfeasible";
    case ErrorKind::RomViolated: return "RomViolated";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::MultipleBranches: return "MultipleBranches";
    case ErrorKind::Degenerate: return "Degenerate";
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::NonNumericField: return "NonNumericField";
    case ErrorKind::EmptyFile: return "EmptyFile";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::WindowTooShort: return "WindowTooShort";
    case ErrorKind::NoContact: return "NoContact";
    case ErrorKind::ObjectTooWide: return "ObjectTooWide";
    case ErrorKind::UnreachablePinch: return "UnreachablePinch";
    case ErrorKind::InfeasibleProfile: return "InfeasibleProfile";
    case ErrorKind::PayloadTooLong: return "PayloadTooLong";
    case ErrorKind::UnknownOpcode: return "UnknownOpcode";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace chopstick
