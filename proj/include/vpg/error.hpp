#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace vpg {

enum class ErrorCode {
  // smiles
  EmptyInput,
  UnbalancedRingClosure,
  UnbalancedBranch,
  UnknownAtomToken,
  ValenceViolation,
  AmbiguousComponents,
  // features / preprocess
  DegenerateScale,
  UnknownUnit,
  NonPositivePressure,
  NonPositiveConcentration,
  MissingMedium,
  MissingTemperature,
  TooFewSamples,
  // fingerprint
  WidthMismatch,
  EmptyTrainSet,
  // scaffold
  LeakageDetected,
  ChecksumMismatch,
  MissingKey,
  // autodiff / gnn
  SegmentOutOfRange,
  NonScalarLoss,
  ShapeMismatch,
  ZeroDeltaError,
  MissingHead,
  // safemt
  EmptyBatch,
  DivergenceDetected,
  MissingSplit,
  // eval
  DegenerateVariance,
  IoError,
  // detect
  InvalidScenario,
  UnitMismatch,
  // generic
  InvalidArgument,
  ConfigError,
  FormatError,
};

const char* to_string(ErrorCode code) noexcept;
/// Owning module of an error code ("smiles", "preprocess", ...).
const char* module_of(ErrorCode code) noexcept;

/// Exception carrying a machine-readable code and, for parse errors, the byte
/// offset into the offending input.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> offset = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> offset() const noexcept { return offset_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> offset_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace vpg
