#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eaf {

enum class ErrorKind {
  NonFinite,
  NegativeSignal,
  TimeRegression,
  DimensionMismatch,
  OutOfRange,
  NonPositiveSigma,
  NoRuleFires,
  EmptyDataset,
  InvalidCount,
  InsufficientHistory,
  InvalidConfig,
  Parse,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace eaf
