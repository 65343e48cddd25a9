#pragma once

#include <stdexcept>
#include <string>

namespace mflm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  /// Short machine-readable tag, e.g. "spec-mismatch".
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct SpecMismatch : Error {
  explicit SpecMismatch(const std::string& what) : Error("spec-mismatch", what) {}
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& what) : Error("invalid-argument", what) {}
};

struct DegenerateDesign : Error {
  explicit DegenerateDesign(const std::string& what) : Error("degenerate-design", what) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error("numeric", what) {}
};

struct SelectionError : Error {
  explicit SelectionError(const std::string& what) : Error("selection", what) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& what) : Error("parse", what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error("io", what) {}
};

}  // namespace mflm
