#pragma once

#include <stdexcept>
#include <string>

namespace ostcal {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (empty clouds, length mismatch, bad files).
class InputError : public Error {
   public:
    using Error::Error;
};

/// A documented precondition on a value was violated (e.g. non-unit axis).
class PreconditionError : public Error {
   public:
    using Error::Error;
};

/// The point projects with non-positive depth.
class BehindViewpointError : public Error {
   public:
    using Error::Error;
};

/// The registration problem has no unique solution (rank-deficient system,
/// collinear clouds).
class DegenerateGeometryError : public Error {
   public:
    using Error::Error;
};

}  // namespace ostcal
