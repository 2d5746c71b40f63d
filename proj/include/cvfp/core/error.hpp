#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cvfp {

enum class ErrorCode {
  InvalidArgument,
  ShapeMismatch,
  InvalidArchitecture,
  ParameterMismatch,
  StaleCache,
  NonFinite,
  LabelOutOfRange,
  ZeroPower,
  InvalidMode,
  Io,
  VersionMismatch,
  Truncated,
  DigestMismatch,
  Config,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::ShapeMismatch: return "shape mismatch";
    case ErrorCode::InvalidArchitecture: return "invalid architecture";
    case ErrorCode::ParameterMismatch: return "parameter mismatch";
    case ErrorCode::StaleCache: return "stale cache";
    case ErrorCode::NonFinite: return "non-finite value";
    case ErrorCode::LabelOutOfRange: return "label out of range";
    case ErrorCode::ZeroPower: return "zero-power signal";
    case ErrorCode::InvalidMode: return "invalid mode";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::VersionMismatch: return "version mismatch";
    case ErrorCode::Truncated: return "truncated input";
    case ErrorCode::DigestMismatch: return "digest mismatch";
    case ErrorCode::Config: return "configuration error";
  }
  return "unknown error";
}

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace cvfp
