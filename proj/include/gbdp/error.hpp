#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gbdp {

enum class ErrorKind {
  MalformedSyntax,
  InvalidTree,
  IoError,
  InvalidConfig,
  InvalidInput,
  IllegalAction,
  IncompleteParse,
  DimensionMismatch,
  IllegalGold,
  InvalidPrefix,
  TerminalState,
  EmptyTreebank,
  DocumentMismatch,
  RelationInventoryMismatch,
  NoMatchingWidth,
  Usage,
  Internal,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedSyntax: return "MalformedSyntax";
    case ErrorKind::InvalidTree: return "InvalidTree";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::IllegalAction: return "IllegalAction";
    case ErrorKind::IncompleteParse: return "IncompleteParse";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::IllegalGold: return "IllegalGold";
    case ErrorKind::InvalidPrefix: return "InvalidPrefix";
    case ErrorKind::TerminalState: return "TerminalState";
    case ErrorKind::EmptyTreebank: return "EmptyTreebank";
    case ErrorKind::DocumentMismatch: return "DocumentMismatch";
    case ErrorKind::RelationInventoryMismatch: return "RelationInventoryMismatch";
    case ErrorKind::NoMatchingWidth: return "NoMatchingWidth";
    case ErrorKind::Usage: return "Usage";
    case ErrorKind::Internal: return "Internal";
  }
  return "Unknown";
}

// Single exception type for the toolkit. `index` carries the 1-based record
// or step number when the error is positional, 0 otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::size_t index = 0)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        index_(index) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::size_t index() const noexcept { return index_; }

 private:
  ErrorKind kind_;
  std::size_t index_;
};

}  // namespace gbdp
