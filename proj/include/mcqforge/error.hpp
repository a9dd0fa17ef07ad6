#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mcqforge {

enum class ErrorCode {
  validation,
  not_found,
  conflict,
  budget_exhausted,
  provider_failure,
  unconfigured_role,
  parse_failure,
  invariant_violation,
  config,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library. The code drives the HTTP status
// mapping in the service layer; detail is free-form context.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace mcqforge
