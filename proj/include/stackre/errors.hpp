#pragma once

#include <stdexcept>
#include <string>

namespace stackre {

// Base of every error raised by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define STACKRE_DEFINE_ERROR(name)                  \
  class name : public error {                       \
   public:                                          \
    explicit name(const std::string& what)          \
        : error(std::string(#name ": ") + what) {}  \
  }

STACKRE_DEFINE_ERROR(Divergent);
STACKRE_DEFINE_ERROR(NonFinite);
STACKRE_DEFINE_ERROR(NoBracket);
STACKRE_DEFINE_ERROR(MaxIterations);
STACKRE_DEFINE_ERROR(SingularJacobian);
STACKRE_DEFINE_ERROR(OutOfDomain);
STACKRE_DEFINE_ERROR(ControlOutOfDomain);
STACKRE_DEFINE_ERROR(NoSolution);
STACKRE_DEFINE_ERROR(ConstraintViolated);
STACKRE_DEFINE_ERROR(NonIntegrable);
STACKRE_DEFINE_ERROR(ValidationError);
STACKRE_DEFINE_ERROR(ParseError);

#undef STACKRE_DEFINE_ERROR

}  // namespace stackre
