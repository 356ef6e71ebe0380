// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace viloop {

enum class Errc {
  InvalidTransform,
  InvalidConfig,
  NoRobotSpawnArea,
  PlacementFailure,
  MissingRay,
  StalePose,
  IllegalTransition,
  Empty,
  OversizeFrame,
  MalformedJson,
  UnknownOp,
  ConnectionLost,
  RejectedCommand,
  InvalidDt,
  DegenerateParams,
  StepAfterDone,
  EmptyScan,
  ConfigError,
  IoError,
};

const char* to_string(Errc code) noexcept;

// All library failures are reported through this type; `code()` is the
// machine-readable part, `what()` carries the detail.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace viloop
