#pragma once

#include <stdexcept>
#include <string>

namespace ff {

enum class Errc {
  dimension_mismatch,
  bad_format,
  truncated,
  invalid_argument,
  numeric_failure,
  unstable_step,
  io_failure,
  unknown_key,
  missing_file,
  incompatible,
};

// All recoverable failures in the core surface as ff::Error. The C API
// translates the code into its status enum; everything else is a bug.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, std::string message) {
  throw Error(code, std::move(message));
}

}  // namespace ff
