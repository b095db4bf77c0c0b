#pragma once

#include <stdexcept>
#include <string>

namespace darnet {

// Base of every error thrown by the library. The CLI maps the subclasses
// onto process exit codes (see tools/cli.cpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad argument values: negative sigma, alpha outside [0,1], unknown label.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Tensor or image dimensions that do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Missing, unreadable or undecodable data files; empty datasets.
class DataError : public Error {
public:
    using Error::Error;
};

// Checkpoint, manifest or label-registry files that fail validation.
class FormatError : public Error {
public:
    using Error::Error;
};

// Non-finite values surfacing in a forward pass.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace darnet
