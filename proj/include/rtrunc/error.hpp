#pragma once

#include <stdexcept>
#include <string>

namespace rtrunc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-domain caller input (zero vectors, k out of range, ...).
class InvalidInput : public Error
{
public:
    using Error::Error;
};

/// A floating-point path that cannot deliver the requested accuracy.
class NumericalError : public Error
{
public:
    using Error::Error;
};

/// A result that violates an invariant the algorithm guarantees. Seeing one
/// of these means a tolerance or logic bug, not bad input.
class InternalConsistencyError : public Error
{
public:
    using Error::Error;
};

/// An iterative method ran out of budget.
class NonConvergence : public Error
{
public:
    NonConvergence(const std::string& what, int iterations, double residual)
        : Error(what), iterations_(iterations), residual_(residual)
    {
    }

    int iterations() const { return iterations_; }
    double residual() const { return residual_; }

private:
    int iterations_;
    double residual_;
};

} // namespace rtrunc
