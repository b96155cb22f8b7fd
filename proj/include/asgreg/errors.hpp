#pragma once

#include <stdexcept>
#include <string>

namespace asgreg {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input (bad dimensions, too few points, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A point lies on the principal plane of the camera.
class AtInfinityError : public Error {
 public:
  using Error::Error;
};

// Point configuration does not determine a unique solution.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

class DecompositionError : public Error {
 public:
  using Error::Error;
};

// Every robust-fitting sample produced a degenerate model.
class RefinementFailedError : public Error {
 public:
  using Error::Error;
};

// Two poses share no visible model points.
class IncomparableError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

}  // namespace asgreg
