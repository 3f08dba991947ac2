#pragma once

#include <stdexcept>
#include <string>

namespace mmd {

// Exit-code classes used by the CLI.
enum class ErrorKind { validation = 1, infeasible = 2 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& code() const { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

[[noreturn]] inline void fail(std::string code, const std::string& message) {
  throw Error(ErrorKind::validation, std::move(code), message);
}

[[noreturn]] inline void fail_infeasible(std::string code, const std::string& message) {
  throw Error(ErrorKind::infeasible, std::move(code), message);
}

}  // namespace mmd
