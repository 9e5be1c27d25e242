#pragma once

#include <stdexcept>
#include <string>

namespace bipnet {

/// Broad failure class. The CLI maps each kind to one exit code.
enum class ErrorKind {
  usage,     ///< bad invocation or configuration
  data,      ///< unreadable/malformed input, failed validation, domain mismatch
  numeric,   ///< degeneracy, non-finite values, overflow
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace bipnet
