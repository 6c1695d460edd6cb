#pragma once

#include <stdexcept>
#include <string>

namespace wristhar {

// Every failure raised by the library derives from Error so callers can
// collect per-participant failures without catching unrelated exceptions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define WRISTHAR_DEFINE_ERROR(Name)                                     \
  class Name : public Error {                                           \
   public:                                                              \
    using Error::Error;                                                 \
    const char* kind() const noexcept override { return #Name; }        \
  }

WRISTHAR_DEFINE_ERROR(SchemaError);
WRISTHAR_DEFINE_ERROR(OrderingError);
WRISTHAR_DEFINE_ERROR(EmptyInputError);
WRISTHAR_DEFINE_ERROR(IrregularSamplingError);
WRISTHAR_DEFINE_ERROR(ParseError);
WRISTHAR_DEFINE_ERROR(ConflictError);
WRISTHAR_DEFINE_ERROR(UnmappedAnnotationError);
WRISTHAR_DEFINE_ERROR(InsufficientDataError);
WRISTHAR_DEFINE_ERROR(FilterDesignError);
WRISTHAR_DEFINE_ERROR(InputError);
WRISTHAR_DEFINE_ERROR(ConfigurationError);
WRISTHAR_DEFINE_ERROR(DegenerateTrainingError);
WRISTHAR_DEFINE_ERROR(ShapeError);
WRISTHAR_DEFINE_ERROR(ValidationError);
WRISTHAR_DEFINE_ERROR(AlignmentError);
WRISTHAR_DEFINE_ERROR(PairingError);
WRISTHAR_DEFINE_ERROR(MetadataError);
WRISTHAR_DEFINE_ERROR(CompatibilityError);
WRISTHAR_DEFINE_ERROR(IoError);

#undef WRISTHAR_DEFINE_ERROR

}  // namespace wristhar
