#pragma once

#include <stdexcept>
#include <string>

namespace chainkit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two trees (or a mask and a tree) disagree on names, arity, or leaf shapes.
class StructureMismatch : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// A numeric probe produced NaN or infinity where a finite value is required.
class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

// A diffeomorphism failed to round-trip at the requested point.
class NonInvertible : public Error {
 public:
  using Error::Error;
};

class InsufficientChains : public Error {
 public:
  using Error::Error;
};

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

// A statistic is undefined for the observed stream (e.g. zero variance).
class DegenerateSeries : public Error {
 public:
  using Error::Error;
};

}  // namespace chainkit
