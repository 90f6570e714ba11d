#pragma once

#include <stdexcept>
#include <string>

namespace sitelens {

// Broad failure classes. The CLI maps these onto its exit codes.
enum class ErrorKind {
  kUsage,      // bad arguments or preconditions on caller-supplied values
  kData,       // malformed or unreadable input
  kInvariant,  // well-formed input that breaks a domain invariant
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error UsageError(const std::string& message) {
  return Error(ErrorKind::kUsage, message);
}
inline Error DataError(const std::string& message) {
  return Error(ErrorKind::kData, message);
}
inline Error InvariantError(const std::string& message) {
  return Error(ErrorKind::kInvariant, message);
}

const char* ErrorKindName(ErrorKind kind);

}  // namespace sitelens
