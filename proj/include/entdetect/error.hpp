#pragma once

#include <stdexcept>
#include <string>

namespace entdetect {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NotHermitian : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class InvalidState : public Error {
 public:
  using Error::Error;
};

/// Rejection sampling ran out of attempts for a requested state.
class GenerationExhausted : public Error {
 public:
  using Error::Error;
};

/// Malformed dataset, checkpoint or manifest text.
class FormatError : public Error {
 public:
  using Error::Error;
};

class WidthMismatch : public Error {
 public:
  using Error::Error;
};

/// Configuration rejected by schema validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Model output head does not match the labels it is evaluated on.
class HeadMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace entdetect
