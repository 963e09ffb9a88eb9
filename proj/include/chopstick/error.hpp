#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chopstick {

enum class ErrorKind {
  // configuration
  ParseError,
  InvalidParameter,
  MissingField,
  // geometry
  NoIntersection,
  Disjoint,
  Contained,
  Concentric,
  NoFeasibleSolution,
  // kinematics
  OutOfReach,
  TravelExceeded,
  LinkageInfeasible,
  RomViolated,
  NoConvergence,
  MultipleBranches,
  // workspace
  Degenerate,
  // validation
  MissingColumn,
  NonNumericField,
  EmptyFile,
  InsufficientData,
  // sensing
  WindowTooShort,
  NoContact,
  // grasping
  ObjectTooWide,
  UnreachablePinch,
  InfeasibleProfile,
  // bus
  PayloadTooLong,
  UnknownOpcode,
  // io
  IoError,
};

std::string_view to_string(ErrorKind kind);

// Every domain failure in the library is reported as an Error carrying its kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace chopstick
