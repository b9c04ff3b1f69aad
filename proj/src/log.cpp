#include "funnelsim/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

#include "funnelsim/error.hpp"

namespace funnelsim {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NoRelativeDegree: return "NoRelativeDegree";
    case ErrorCode::AmbiguousZero: return "AmbiguousZero";
    case ErrorCode::TransformSingular: return "TransformSingular";
    case ErrorCode::NotHurwitz: return "NotHurwitz";
    case ErrorCode::IndefiniteGamma: return "IndefiniteGamma";
    case ErrorCode::InvalidQ: return "InvalidQ";
    case ErrorCode::DeltaTooLarge: return "DeltaTooLarge";
    case ErrorCode::AvailabilityTooShort: return "AvailabilityTooShort";
    case ErrorCode::InfeasibleEtaStar: return "InfeasibleEtaStar";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::CiOverflow: return "CiOverflow";
    case ErrorCode::InfeasibleRefinement: return "InfeasibleRefinement";
    case ErrorCode::TemplateRejected: return "TemplateRejected";
    case ErrorCode::DegenerateCertificate: return "DegenerateCertificate";
    case ErrorCode::InitialConditionViolated: return "InitialConditionViolated";
    case ErrorCode::MissingLimits: return "MissingLimits";
    case ErrorCode::NonMonotoneTime: return "NonMonotoneTime";
    case ErrorCode::FunnelViolation: return "FunnelViolation";
    case ErrorCode::StepUnderflow: return "StepUnderflow";
    case ErrorCode::SingularMassMatrix: return "SingularMassMatrix";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::TraceFormatError: return "TraceFormatError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace log {
namespace {

Level parse_env() {
  const char* raw = std::getenv("FUNNELSIM_LOG");
  if (raw == nullptr) return Level::Warn;
  const std::string v(raw);
  if (v == "error" || v == "0") return Level::Error;
  if (v == "warn" || v == "1") return Level::Warn;
  if (v == "info" || v == "2") return Level::Info;
  if (v == "debug" || v == "3") return Level::Debug;
  return Level::Warn;
}

std::atomic<int>& current() {
  static std::atomic<int> level{static_cast<int>(parse_env())};
  return level;
}

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

constexpr std::string_view tag(Level level) {
  switch (level) {
    case Level::Error: return "error";
    case Level::Warn: return "warn";
    case Level::Info: return "info";
    case Level::Debug: return "debug";
  }
  return "?";
}

}  // namespace

Level threshold() { return static_cast<Level>(current().load()); }

void set_threshold(Level level) { current().store(static_cast<int>(level)); }

void write(Level level, std::string_view message) {
  if (static_cast<int>(level) > current().load()) return;
  std::lock_guard lock(sink_mutex());
  std::cerr << "[funnelsim " << tag(level) << "] " << message << '\n';
}

}  // namespace log
}  // namespace funnelsim
