#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace embagg {

enum class ErrorCode {
  DimensionMismatch,
  NonFiniteValue,
  EmptyInput,
  OracleStrategyMisuse,
  TooFewImages,
  EmptyTemplateAfterFilter,
  InsufficientPersons,
  NonPositiveInput,
  KTooLarge,
  InvalidArgument,
  ManifestParseError,
  MatrixSizeMismatch,
  UnsupportedFormatVersion,
  DuplicateSourceName,
  IoError,
  UsageError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        index_(index) {}

  ErrorCode code() const noexcept { return code_; }

  /// Offending element index for NonFiniteValue.
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> index_;
};

}  // namespace embagg
