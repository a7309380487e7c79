#pragma once

#include <stdexcept>
#include <string>

namespace respnav {

// Every failure raised by the library derives from Error so callers can
// catch a single type and still dispatch on the concrete kind.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

#define RESPNAV_ERROR(Name)                                                    \
  class Name : public Error                                                    \
  {                                                                            \
  public:                                                                      \
    explicit Name(std::string const &what) : Error(#Name ": " + what) {}       \
  }

RESPNAV_ERROR(ConfigError);
RESPNAV_ERROR(ConfigMismatch);
RESPNAV_ERROR(FormatError);
RESPNAV_ERROR(MissingNavData);
RESPNAV_ERROR(DegeneratePatch);
RESPNAV_ERROR(EmptyBin);
RESPNAV_ERROR(EmptyPhase);
RESPNAV_ERROR(NoTriggers);
RESPNAV_ERROR(TooSmall);
RESPNAV_ERROR(InsufficientSamples);

#undef RESPNAV_ERROR

} // namespace respnav
