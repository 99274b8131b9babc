#pragma once

#include <stdexcept>
#include <string>

namespace screenopt {

enum class ErrorCode {
  InvalidResolution,
  InvalidArgument,
  Alignment,
  Dimension,
  GridMismatch,
  Infeasible,
  InvalidRectangle,
  TooLarge,
  Config,
  Io,
};

/// Short kebab-case tag for an error code, e.g. "invalid-resolution".
const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace screenopt
