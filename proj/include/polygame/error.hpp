#pragma once

#include <stdexcept>
#include <string>

namespace polygame {

// Base of every exception thrown by the library. The CLI maps subclasses to
// exit codes, so each failure mode gets its own type.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define POLYGAME_DEFINE_ERROR(name)            \
  class name : public error {                  \
   public:                                     \
    explicit name(const std::string& what_arg) \
        : error(#name ": " + what_arg) {}      \
  };

POLYGAME_DEFINE_ERROR(GroundTooLarge)
POLYGAME_DEFINE_ERROR(GraphTooLarge)
POLYGAME_DEFINE_ERROR(InvalidSpec)
POLYGAME_DEFINE_ERROR(NotInPolytope)
POLYGAME_DEFINE_ERROR(ExchangeNotFound)
POLYGAME_DEFINE_ERROR(NotLaminar)
POLYGAME_DEFINE_ERROR(ConflictingStrategies)
POLYGAME_DEFINE_ERROR(QueueOverload)
POLYGAME_DEFINE_ERROR(NoConvergence)
POLYGAME_DEFINE_ERROR(InvalidK)
POLYGAME_DEFINE_ERROR(Unstable)
POLYGAME_DEFINE_ERROR(WitnessNotFound)
POLYGAME_DEFINE_ERROR(NotNonMatroid)
POLYGAME_DEFINE_ERROR(InfeasibleProfile)

#undef POLYGAME_DEFINE_ERROR

}  // namespace polygame
