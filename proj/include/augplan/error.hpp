#pragma once

#include <stdexcept>
#include <string>

namespace augplan {

/// Broad failure classes. The CLI maps them onto exit codes 1, 2 and 3.
enum class ErrorKind { usage, data, stage };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_data_error(const std::string& message) {
  throw Error(ErrorKind::data, message);
}

[[noreturn]] inline void throw_stage_error(const std::string& message) {
  throw Error(ErrorKind::stage, message);
}

[[noreturn]] inline void throw_usage_error(const std::string& message) {
  throw Error(ErrorKind::usage, message);
}

}  // namespace augplan
