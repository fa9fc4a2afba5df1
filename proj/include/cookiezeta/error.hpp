#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cookiezeta {

enum class ErrorKind {
  // configuration / precondition failures
  OverlappingBranches,
  NotContracting,
  NonMonotone,
  InvalidBranch,
  InvalidArgument,
  LevelTooLarge,
  DepthTooLarge,
  NotNormalized,
  ZeroMeasureInterval,
  ZeroNotInterior,
  ConditionAViolated,
  NonCenteredObservable,
  WindowDegenerate,
  AlphaOutOfRange,
  AtOrBelowAbscissa,
  ConfigError,
  // numeric failures
  NoConvergence,
  BracketFailure,
  NoSignChange,
  TailNotConverged,
  DegenerateVariance,
  CacheCorrupt,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::OverlappingBranches: return "OverlappingBranches";
    case ErrorKind::NotContracting: return "NotContracting";
    case ErrorKind::NonMonotone: return "NonMonotone";
    case ErrorKind::InvalidBranch: return "InvalidBranch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::LevelTooLarge: return "LevelTooLarge";
    case ErrorKind::DepthTooLarge: return "DepthTooLarge";
    case ErrorKind::NotNormalized: return "NotNormalized";
    case ErrorKind::ZeroMeasureInterval: return "ZeroMeasureInterval";
    case ErrorKind::ZeroNotInterior: return "ZeroNotInterior";
    case ErrorKind::ConditionAViolated: return "ConditionAViolated";
    case ErrorKind::NonCenteredObservable: return "NonCenteredObservable";
    case ErrorKind::WindowDegenerate: return "WindowDegenerate";
    case ErrorKind::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorKind::AtOrBelowAbscissa: return "AtOrBelowAbscissa";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::BracketFailure: return "BracketFailure";
    case ErrorKind::NoSignChange: return "NoSignChange";
    case ErrorKind::TailNotConverged: return "TailNotConverged";
    case ErrorKind::DegenerateVariance: return "DegenerateVariance";
    case ErrorKind::CacheCorrupt: return "CacheCorrupt";
  }
  return "Unknown";
}

/// True for errors caused by bad input rather than by a numeric procedure.
constexpr bool is_validation_error(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NoConvergence:
    case ErrorKind::BracketFailure:
    case ErrorKind::NoSignChange:
    case ErrorKind::TailNotConverged:
    case ErrorKind::DegenerateVariance:
    case ErrorKind::CacheCorrupt:
      return false;
    default:
      return true;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& detail) { throw Error(kind, detail); }

}  // namespace cookiezeta
