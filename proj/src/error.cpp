#include "vpg/error.hpp"

namespace vpg {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::UnbalancedRingClosure: return "UnbalancedRingClosure";
    case ErrorCode::UnbalancedBranch: return "UnbalancedBranch";
    case ErrorCode::UnknownAtomToken: return "UnknownAtomToken";
    case ErrorCode::ValenceViolation: return "ValenceViolation";
    case ErrorCode::AmbiguousComponents: return "AmbiguousComponents";
    case ErrorCode::DegenerateScale: return "DegenerateScale";
    case ErrorCode::UnknownUnit: return "UnknownUnit";
    case ErrorCode::NonPositivePressure: return "NonPositivePressure";
    case ErrorCode::NonPositiveConcentration: return "NonPositiveConcentration";
    case ErrorCode::MissingMedium: return "MissingMedium";
    case ErrorCode::MissingTemperature: return "MissingTemperature";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::WidthMismatch: return "WidthMismatch";
    case ErrorCode::EmptyTrainSet: return "EmptyTrainSet";
    case ErrorCode::LeakageDetected: return "LeakageDetected";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::MissingKey: return "MissingKey";
    case ErrorCode::SegmentOutOfRange: return "SegmentOutOfRange";
    case ErrorCode::NonScalarLoss: return "NonScalarLoss";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ZeroDeltaError: return "ZeroDeltaError";
    case ErrorCode::MissingHead: return "MissingHead";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::MissingSplit: return "MissingSplit";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::UnitMismatch: return "UnitMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::FormatError: return "FormatError";
  }
  return "Unknown";
}

const char* module_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyInput:
    case ErrorCode::UnbalancedRingClosure:
    case ErrorCode::UnbalancedBranch:
    case ErrorCode::UnknownAtomToken:
    case ErrorCode::ValenceViolation:
    case ErrorCode::AmbiguousComponents: return "smiles";
    case ErrorCode::DegenerateScale:
    case ErrorCode::UnknownUnit:
    case ErrorCode::NonPositivePressure:
    case ErrorCode::NonPositiveConcentration:
    case ErrorCode::MissingMedium:
    case ErrorCode::MissingTemperature:
    case ErrorCode::TooFewSamples: return "preprocess";
    case ErrorCode::WidthMismatch:
    case ErrorCode::EmptyTrainSet: return "fingerprint";
    case ErrorCode::LeakageDetected:
    case ErrorCode::ChecksumMismatch:
    case ErrorCode::MissingKey: return "scaffold";
    case ErrorCode::SegmentOutOfRange:
    case ErrorCode::NonScalarLoss: return "autodiff";
    case ErrorCode::ShapeMismatch:
    case ErrorCode::ZeroDeltaError:
    case ErrorCode::MissingHead: return "gnn";
    case ErrorCode::EmptyBatch:
    case ErrorCode::DivergenceDetected:
    case ErrorCode::MissingSplit: return "safemt";
    case ErrorCode::DegenerateVariance:
    case ErrorCode::IoError: return "eval";
    case ErrorCode::InvalidScenario:
    case ErrorCode::UnitMismatch: return "detect";
    case ErrorCode::InvalidArgument:
    case ErrorCode::ConfigError:
    case ErrorCode::FormatError: return "cli";
  }
  return "cli";
}

namespace {
std::string format_message(ErrorCode code, const std::string& message,
                           std::optional<std::size_t> offset) {
  std::string out = to_string(code);
  if (offset) out += " at byte " + std::to_string(*offset);
  out += ": " + message;
  return out;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> offset)
    : std::runtime_error(format_message(code, message, offset)),
      code_(code),
      offset_(offset) {}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace vpg
