#pragma once

#include <stdexcept>
#include <string>

namespace martlab {

enum class Errc {
  invalid_argument,
  parse,
  indeterminate_tail,
  zero_mass_block,
  not_terminating,
  missing_uniform,
  precondition_failed,
  not_applicable,
  internal,
};

// Single exception type for the whole lab; the code maps 1:1 onto the
// C API status codes.
class LabError : public std::runtime_error {
 public:
  LabError(Errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw LabError(code, msg); }

}  // namespace martlab
