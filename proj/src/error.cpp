// SPDX-License-Identifier: Apache-2.0
#include "viloop/error.hpp"

namespace viloop {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidTransform: return "InvalidTransform";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::NoRobotSpawnArea: return "NoRobotSpawnArea";
    case Errc::PlacementFailure: return "PlacementFailure";
    case Errc::MissingRay: return "MissingRay";
    case Errc::StalePose: return "StalePose";
    case Errc::IllegalTransition: return "IllegalTransition";
    case Errc::Empty: return "Empty";
    case Errc::OversizeFrame: return "OversizeFrame";
    case Errc::MalformedJson: return "MalformedJson";
    case Errc::UnknownOp: return "UnknownOp";
    case Errc::ConnectionLost: return "ConnectionLost";
    case Errc::RejectedCommand: return "RejectedCommand";
    case Errc::InvalidDt: return "InvalidDt";
    case Errc::DegenerateParams: return "DegenerateParams";
    case Errc::StepAfterDone: return "StepAfterDone";
    case Errc::EmptyScan: return "EmptyScan";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace viloop
