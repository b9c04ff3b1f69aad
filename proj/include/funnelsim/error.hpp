#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace funnelsim {

enum class ErrorCode {
  InvalidArgument,
  // sysmodel
  NoRelativeDegree,
  AmbiguousZero,
  TransformSingular,
  NotHurwitz,
  IndefiniteGamma,
  // design
  InvalidQ,
  DeltaTooLarge,
  AvailabilityTooShort,
  InfeasibleEtaStar,
  EmptyWindow,
  CiOverflow,
  InfeasibleRefinement,
  TemplateRejected,
  DegenerateCertificate,
  InitialConditionViolated,
  MissingLimits,
  // controller / simulator
  NonMonotoneTime,
  FunnelViolation,
  StepUnderflow,
  SingularMassMatrix,
  // io
  ConfigError,
  TraceFormatError,
  IoError,
};

std::string_view error_code_name(ErrorCode code) noexcept;

/// Exception type thrown by every core routine. The code is what callers
/// branch on; the message carries the numbers that triggered it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when a funnel-domain bound ‖e_i‖ < 1 fails; index is the 1-based stage.
class FunnelViolationError : public Error {
 public:
  FunnelViolationError(int index, double norm, const std::string& where = {})
      : Error(ErrorCode::FunnelViolation,
              "stage " + std::to_string(index) + " has norm " + std::to_string(norm) +
                  (where.empty() ? "" : " " + where)),
        index_(index),
        norm_(norm) {}

  int index() const noexcept { return index_; }
  double norm() const noexcept { return norm_; }

 private:
  int index_;
  double norm_;
};

}  // namespace funnelsim
