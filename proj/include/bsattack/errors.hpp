#pragma once

#include <stdexcept>
#include <string>

namespace bsattack {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes; the message names the offending primitive.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed files: datasets, checkpoints, reports, config.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace bsattack
