#pragma once

#include <stdexcept>
#include <string>

namespace curveball {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CURVEBALL_DEFINE_ERROR(Name)    \
  class Name : public Error {           \
   public:                              \
    using Error::Error;                 \
  }

CURVEBALL_DEFINE_ERROR(ShapeMismatch);
CURVEBALL_DEFINE_ERROR(InvalidRange);
CURVEBALL_DEFINE_ERROR(SingularSystem);
CURVEBALL_DEFINE_ERROR(NotPositiveDefinite);
CURVEBALL_DEFINE_ERROR(TooLarge);
CURVEBALL_DEFINE_ERROR(UnsupportedLoss);
CURVEBALL_DEFINE_ERROR(InvalidDim);
CURVEBALL_DEFINE_ERROR(BadMagic);
CURVEBALL_DEFINE_ERROR(TruncatedFile);
CURVEBALL_DEFINE_ERROR(CountMismatch);
CURVEBALL_DEFINE_ERROR(DampingExhausted);
CURVEBALL_DEFINE_ERROR(LineSearchFailed);
CURVEBALL_DEFINE_ERROR(ConfigError);
CURVEBALL_DEFINE_ERROR(NoConvergentSetting);
CURVEBALL_DEFINE_ERROR(IoError);

#undef CURVEBALL_DEFINE_ERROR

}  // namespace curveball
