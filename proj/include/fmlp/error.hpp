#pragma once

#include <stdexcept>
#include <string>

namespace fmlp {

/// Failure categories shared by the C++ core and the C API.
enum class ErrorCode {
  InvalidArgument,
  InvalidDimension,
  InvalidKnots,
  Domain,
  Shape,
  EmptyData,
  Underdetermined,
  Conditioning,
  Evaluation,
  Divergence,
  BasisMismatch,
  Parse,
  Ordering,
  Config,
  Io,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

const char* to_string(ErrorCode code) noexcept;

/// True for errors caused by bad input (arguments, files, configs) rather
/// than by a failure while computing.
bool is_validation_error(ErrorCode code) noexcept;

}  // namespace fmlp
