#pragma once

#include <stdexcept>
#include <string>

namespace wvsc {

// Base of every error the library throws. Each subclass maps to one error
// category of the public contracts so callers (and the CLI exit-code logic)
// can dispatch on type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or insufficient input data (missing files, too few frames).
class InputError : public Error {
 public:
  using Error::Error;
};

// Tensor or frame dimensions disagree with what an operation requires.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A payload does not fit into the symbols available on a channel realization.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Inconsistent configuration (unknown keys, channel counts out of range).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// No rate plan satisfies the requested bandwidth budget.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, double minimum_cbr)
      : Error(what), minimum_cbr_(minimum_cbr) {}
  double minimum_cbr() const { return minimum_cbr_; }

 private:
  double minimum_cbr_;
};

// Unusable LDPC parity-check matrix.
class CodeError : public Error {
 public:
  using Error::Error;
};

// Truncated or unparsable bitstream header.
class StreamError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long step) : Error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

// Filesystem failures; the message always carries the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace wvsc
