#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace jpa {

enum class ErrorCode {
  ConfigInvalid,
  NumericalOverflow,
  LayoutOverlap,
  BandwidthExceeded,
  IndexOutOfRange,
  InsufficientData,
  NonPositiveGain,
  DimensionMismatch,
  NotPositiveDefinite,
  InvalidModeSet,
  ZeroDenominator,
  UnmatchedPump,
  SingularAtThreshold,
  NonRealResidue,
  UnsupportedTarget,
  FitDiverged,
  DegenerateSweep,
  PhysicalityViolation,
  Io,
};

const char* error_name(ErrorCode code);

// Config-type errors map to CLI exit code 2, everything numerical to 3.
bool is_config_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

class ConfigInvalid : public Error {
 public:
  explicit ConfigInvalid(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class NumericalOverflow : public Error {
 public:
  NumericalOverflow(std::size_t trajectory, double time, const std::string& detail)
      : Error(ErrorCode::NumericalOverflow,
              "trajectory " + std::to_string(trajectory) + " at t=" + std::to_string(time) + " s: " + detail),
        trajectory_(trajectory) {}
  std::size_t trajectory() const { return trajectory_; }

 private:
  std::size_t trajectory_;
};

}  // namespace jpa
