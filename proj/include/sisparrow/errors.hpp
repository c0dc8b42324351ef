#pragma once

#include <stdexcept>
#include <string>

namespace sisparrow {

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error
{
public:
    using Error::Error;
};

class DimensionMismatch : public InvalidArgument
{
public:
    using InvalidArgument::InvalidArgument;
};

/// Raised when a Cholesky factorization of a matrix required to be
/// positive definite fails.
class NotPositiveDefinite : public Error
{
public:
    using Error::Error;
};

/// Raised when a selected subarray block is too small to span the signal subspace.
class InsufficientAperture : public Error
{
public:
    using Error::Error;
};

class Unidentifiable : public Error
{
public:
    using Error::Error;
};

class ConfigError : public Error
{
public:
    using Error::Error;
};

} // namespace sisparrow
