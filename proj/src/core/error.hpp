#pragma once

#include <stdexcept>
#include <string>

namespace saber {

enum class ErrorCode {
  invalid_argument = 1,
  parse = 2,
  validation = 3,
  io = 4,
  contract = 5,   // API misuse, e.g. stepping a finished episode
  numeric = 6,    // NaN loss, divergence
  network = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string msg)
      : std::runtime_error(std::move(msg)), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace saber
