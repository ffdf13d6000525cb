#pragma once

#include <stdexcept>
#include <string>

namespace plasma {

/// Base class for all errors raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition or input-validation failure.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Unreadable files, malformed checkpoints, bad streams.
class IoError : public Error {
public:
    using Error::Error;
};

/// Numerical failure during training (NaN/Inf losses, non-finite tensors).
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace plasma
