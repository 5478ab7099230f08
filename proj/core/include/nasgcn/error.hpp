#pragma once

#include <stdexcept>
#include <string>

namespace nasgcn {

/// Base class for every error raised by the library. Messages are meant to be
/// shown to a user verbatim.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration file or command line that does not match the schema.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace nasgcn
