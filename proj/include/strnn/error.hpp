#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace strnn {

enum class ErrorCode {
  NonBinaryEntry,
  UpperTriangleNonZero,
  InvalidDim,
  InvalidThreshold,
  InvalidArgument,
  ParseError,
  IoError,
  InsufficientWidth,
  BudgetExceeded,
  ShapeMismatch,
  DimMismatch,
  NonBinaryInput,
  NonFiniteInput,
  InvalidPair,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonBinaryEntry: return "NonBinaryEntry";
    case ErrorCode::UpperTriangleNonZero: return "UpperTriangleNonZero";
    case ErrorCode::InvalidDim: return "InvalidDim";
    case ErrorCode::InvalidThreshold: return "InvalidThreshold";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InsufficientWidth: return "InsufficientWidth";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::NonBinaryInput: return "NonBinaryInput";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::InvalidPair: return "InvalidPair";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable error code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Error that names a matrix position, e.g. an invalid adjacency entry.
class EntryError : public Error {
 public:
  EntryError(ErrorCode code, std::size_t row, std::size_t col, const std::string& what)
      : Error(code, what + " at (" + std::to_string(row) + "," + std::to_string(col) + ")"),
        row_(row),
        col_(col) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

/// Parse failure with the 1-based line number of the offending input.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace strnn
