#pragma once

#include <stdexcept>
#include <string>

namespace flangecal {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FLANGECAL_DECLARE_ERROR(Name)            \
  class Name : public Error {                    \
   public:                                       \
    using Error::Error;                          \
  }

FLANGECAL_DECLARE_ERROR(InvalidArgument);
FLANGECAL_DECLARE_ERROR(InvalidTransform);
FLANGECAL_DECLARE_ERROR(InsufficientPoints);
FLANGECAL_DECLARE_ERROR(DegenerateSample);
FLANGECAL_DECLARE_ERROR(NoModelFound);
FLANGECAL_DECLARE_ERROR(SegmentationFailed);
FLANGECAL_DECLARE_ERROR(DegenerateConfiguration);
FLANGECAL_DECLARE_ERROR(RegistrationFailed);
FLANGECAL_DECLARE_ERROR(CannotCompensate);
FLANGECAL_DECLARE_ERROR(StreamExhausted);
FLANGECAL_DECLARE_ERROR(ContactLost);
FLANGECAL_DECLARE_ERROR(KinematicSingularity);
FLANGECAL_DECLARE_ERROR(NeverEngaged);
FLANGECAL_DECLARE_ERROR(UnitMismatch);
FLANGECAL_DECLARE_ERROR(SchemaError);

#undef FLANGECAL_DECLARE_ERROR

/// Malformed input file; carries the 1-based line number (0 when unknown).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace flangecal
