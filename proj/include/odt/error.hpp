#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace odt {

enum class ErrorCode {
  kInvalidInput,
  kUnsupportedLevel,
  kUnknownUnit,
  kUnknownDataset,
  kInvalidLevelPair,
  kMalformedDestinationMap,
  kMalformedDate,
  kMixedDataset,
  kInvalidPeriod,
  kUnsupportedDirection,
  kFormat,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (HTTP layer, CLI) can map it to a status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace odt
