#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace strokepipe {

enum class ErrorCode {
  Io,
  Format,
  InvalidArgument,
  DimensionMismatch,
  AllMasked,
  EmptyCooccurrence,
  NegativeInput,
  SingleClass,
  NonFinite,
  DegenerateModel,
  FeatureKindMismatch,
  NonConvergence,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure surfaced by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace strokepipe
