#pragma once

#include <stdexcept>
#include <string>

namespace taskforge {

// Root of every error the library raises. `kind` is a stable, machine-readable
// tag (e.g. "MissingSection") that ends up in the JSONL event log.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message) : Error("InvalidArgument", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("IoError", message) {}
};

}  // namespace taskforge
