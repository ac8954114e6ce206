// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mgc {

enum class ErrorKind {
  Schema,
  NonPositiveParameter,
  DuplicateLineEndpoints,
  InvalidIndex,
  DisconnectedGraph,
  DimensionMismatch,
  VoltageTooLowForCPL,
  NonPositiveGamma,
  X22NotNegative,
  UnknownEntry,
  StructureViolation,
  AssumptionViolated,
  Infeasible,
  SolverFailure,
  NonFiniteState,
  ZeroDisturbanceEnergy,
  DisconnectsGraph,
  BundleMismatch,
  MissingInput,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::string stage = {})
      : std::runtime_error(what), kind_(kind), stage_(std::move(stage)) {}

  ErrorKind kind() const { return kind_; }
  // Pipeline stage that raised the error, empty outside synthesis.
  const std::string& stage() const { return stage_; }

 private:
  ErrorKind kind_;
  std::string stage_;
};

}  // namespace mgc
