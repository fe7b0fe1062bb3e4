#pragma once

#include <stdexcept>
#include <string>

namespace lmesel {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: wrong dimensions, bad config values, unparsable files.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A factorization or evaluation produced something unusable.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// An iterative method ran out of iterations before meeting its tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Backtracking could not find an acceptable step.
class StepFailure : public Error {
public:
    using Error::Error;
};

} // namespace lmesel
