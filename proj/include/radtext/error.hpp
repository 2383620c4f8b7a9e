#pragma once

#include <stdexcept>
#include <string>

namespace radtext {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text, numbers, records or files.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Range whose upper end falls below its lower end after expansion.
class RangeOrderError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameters passed to a training or evaluation routine.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Operation applied to data that cannot support it (empty corpus, OOV word...).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace radtext
