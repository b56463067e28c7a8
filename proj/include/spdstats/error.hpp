#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace spdstats {

enum class ErrorCode {
  InvalidInput,
  RankDeficient,
  NotPSD,
  NonConvergence,
  DegenerateDesign,
  EmptyNeighborhood,
  UnsupportedCase,
  InsufficientSamples,
  SeedBelowThreshold,
  SeedOutOfBounds,
  IndexOutOfRange,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::DegenerateDesign: return "DegenerateDesign";
    case ErrorCode::EmptyNeighborhood: return "EmptyNeighborhood";
    case ErrorCode::UnsupportedCase: return "UnsupportedCase";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::SeedBelowThreshold: return "SeedBelowThreshold";
    case ErrorCode::SeedOutOfBounds: return "SeedOutOfBounds";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
  }
  return "Unknown";
}

/// Domain error raised by every module. `value()` carries the offending
/// quantity where one exists (e.g. the eigenvalue that failed a rank test).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::optional<double> value = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), value_(value) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<double> value() const noexcept { return value_; }

 private:
  ErrorCode code_;
  std::optional<double> value_;
};

/// Iterative solver ran out of iterations. Keeps the last iterate so callers
/// can decide whether it is good enough.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, Eigen::MatrixXd last_iterate, double objective)
      : Error(ErrorCode::NonConvergence, what, objective),
        last_iterate_(std::move(last_iterate)),
        objective_(objective) {}

  const Eigen::MatrixXd& last_iterate() const noexcept { return last_iterate_; }
  double objective() const noexcept { return objective_; }

 private:
  Eigen::MatrixXd last_iterate_;
  double objective_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what,
                              std::optional<double> value = std::nullopt) {
  throw Error(code, what, value);
}

}  // namespace spdstats
