#pragma once

#include <stdexcept>
#include <string>

namespace mixdim {

// Base of every error the library throws. `code()` is a stable identifier
// used by the CLI and by tests.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Input rejected before any numerics ran.
class ValidationError : public Error {
  using Error::Error;
};

// A numerical step could not be completed.
class NumericalError : public Error {
  using Error::Error;
};

#define MIXDIM_ERROR(Name, Base)                                        \
  class Name : public Base {                                            \
   public:                                                              \
    explicit Name(const std::string& what) : Base(#Name, what) {}       \
  };

MIXDIM_ERROR(NonPositiveParameter, ValidationError)
MIXDIM_ERROR(StructuralConditionViolated, ValidationError)
MIXDIM_ERROR(CondensationBelowGeometricGeneration, ValidationError)
MIXDIM_ERROR(NotGeometric, ValidationError)
MIXDIM_ERROR(DepthMismatch, ValidationError)
MIXDIM_ERROR(ExponentOrderViolated, ValidationError)
MIXDIM_ERROR(ScaleEqualsRadius, ValidationError)
MIXDIM_ERROR(CutoffTooSmall, ValidationError)
MIXDIM_ERROR(DepthBelowChartLevel, ValidationError)
MIXDIM_ERROR(Alpha1Zero, ValidationError)
MIXDIM_ERROR(InsufficientDepths, ValidationError)
MIXDIM_ERROR(InsufficientLevels, ValidationError)
MIXDIM_ERROR(TooLarge, ValidationError)
MIXDIM_ERROR(ConfigError, ValidationError)

MIXDIM_ERROR(KirchhoffViolated, NumericalError)
MIXDIM_ERROR(SingularSystem, NumericalError)
MIXDIM_ERROR(UnresolvableMode0, NumericalError)
MIXDIM_ERROR(SingularInterfaceOperator, NumericalError)

#undef MIXDIM_ERROR

}  // namespace mixdim
