#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bqo {

enum class ErrorCode {
  kNotStable,
  kSingularDecomposition,
  kNoConvergence,
  kDimTooLarge,
  kSingularOperator,
  kShapeMismatch,
  kNonFinite,
  kNotPsd,
  kVerificationFailed,
  kBadGamma,
  kRankDeficient,
  kNonFiniteState,
  kGridMismatch,
  kBadSpec,
  kNotInKernel,
  kBadOption,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code
/// identifies the failure class so callers (and the CLI) can branch on it.
class BqoError : public std::runtime_error {
 public:
  BqoError(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the fixed-point generalized Lyapunov solver when the iteration
/// cap is hit before either stopping criterion is met.
class NoConvergenceError : public BqoError {
 public:
  NoConvergenceError(const std::string& what, double last_residual,
                     int iterations)
      : BqoError(ErrorCode::kNoConvergence, what),
        last_residual_(last_residual),
        iterations_(iterations) {}

  double last_residual() const noexcept { return last_residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double last_residual_;
  int iterations_;
};

/// Raised when a reduction order exceeds the numerical rank of U^T L.
class RankDeficientError : public BqoError {
 public:
  RankDeficientError(const std::string& what, int achievable_order)
      : BqoError(ErrorCode::kRankDeficient, what),
        achievable_order_(achievable_order) {}

  int achievable_order() const noexcept { return achievable_order_; }

 private:
  int achievable_order_;
};

}  // namespace bqo
