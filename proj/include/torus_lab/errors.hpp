#pragma once

#include <stdexcept>
#include <string>

namespace torus {

/// Process exit codes used by the command line driver.
enum class ExitCode : int {
  ok = 0,
  validation = 2,
  admissibility = 3,
  cap_exceeded = 4,
  internal = 5,
};

class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what, ExitCode code)
      : std::runtime_error(what), kind_(std::move(kind)), code_(code) {}

  const std::string& kind() const noexcept { return kind_; }
  ExitCode code() const noexcept { return code_; }

 private:
  std::string kind_;
  ExitCode code_;
};

#define TORUS_DEFINE_ERROR(Name, exit_code)                      \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& what)                       \
        : Error(#Name, what, ExitCode::exit_code) {}             \
  };

TORUS_DEFINE_ERROR(ValidationError, validation)
TORUS_DEFINE_ERROR(InvalidMatrixError, validation)
TORUS_DEFINE_ERROR(AliasingError, validation)
TORUS_DEFINE_ERROR(UnsupportedOrder, validation)
TORUS_DEFINE_ERROR(SpaceMismatch, validation)
TORUS_DEFINE_ERROR(EmptyWindow, validation)
TORUS_DEFINE_ERROR(AdmissibilityError, admissibility)
TORUS_DEFINE_ERROR(CapExceeded, cap_exceeded)
TORUS_DEFINE_ERROR(DegenerateState, internal)
TORUS_DEFINE_ERROR(InternalError, internal)

#undef TORUS_DEFINE_ERROR

}  // namespace torus
