#pragma once

#include <stdexcept>
#include <string>

namespace balayage {

/// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  invalid_input,   // violated precondition or malformed config
  unsupported,     // operation not defined for this input
  non_convergence  // iterative solver hit its cap
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error invalid_input(const std::string& what) { return {ErrorKind::invalid_input, what}; }
inline Error unsupported(const std::string& what) { return {ErrorKind::unsupported, what}; }
inline Error non_convergence(const std::string& what) { return {ErrorKind::non_convergence, what}; }

}  // namespace balayage
