#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace extremal {

enum class ErrorCode {
  kInvalidThreshold,
  kWindow,
  kInsufficientData,
  kScheme,
  kNoExceedance,
  kDimensionMismatch,
  kInvalidParameter,
  kInvalidFunctional,
  kInsufficientEvents,
  kInsufficientSample,
  kConfig,
  kIo,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidThreshold: return "invalid_threshold";
    case ErrorCode::kWindow: return "window";
    case ErrorCode::kInsufficientData: return "insufficient_data";
    case ErrorCode::kScheme: return "scheme";
    case ErrorCode::kNoExceedance: return "no_exceedance";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kInvalidParameter: return "invalid_parameter";
    case ErrorCode::kInvalidFunctional: return "invalid_functional";
    case ErrorCode::kInsufficientEvents: return "insufficient_events";
    case ErrorCode::kInsufficientSample: return "insufficient_sample";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised when an estimator denominator (count of exceedances) is zero.
class NoExceedanceError : public Error {
 public:
  NoExceedanceError(std::size_t n, double u)
      : Error(ErrorCode::kNoExceedance,
              "no observation exceeds the threshold (n=" + std::to_string(n) +
                  ", u=" + std::to_string(u) + ")"),
        n_(n),
        u_(u) {}

  std::size_t n() const noexcept { return n_; }
  double u() const noexcept { return u_; }

 private:
  std::size_t n_;
  double u_;
};

}  // namespace extremal
