#pragma once

#include <stdexcept>
#include <string>

namespace molf {

/// Base of every error the toolkit throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not fit the operation.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A documented precondition was violated by the caller.
class ContractError : public Error {
public:
    using Error::Error;
};

/// A NaN or Inf showed up where only finite values are allowed.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Checkpoint could not be read back (truncated, wrong version, shape mismatch).
class LoadError : public Error {
public:
    using Error::Error;
};

} // namespace molf
