#pragma once

#include <stdexcept>
#include <string>

namespace wassdep {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class NotPositiveSemidefinite : public Error {
public:
    using Error::Error;
};

class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

/// Eigensolver failed to converge (ill-conditioned input).
class IterationFailure : public Error {
public:
    using Error::Error;
};

/// Coefficient denominator below tolerance (signals a zero block).
class DegenerateDenominator : public Error {
public:
    using Error::Error;
};

/// Repeated block eigenvalues: the coefficient derivative is not linear there.
class DegenerateEigenvalues : public Error {
public:
    using Error::Error;
};

class ZeroVariance : public Error {
public:
    using Error::Error;
};

class SampleTooSmall : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class KindMismatch : public Error {
public:
    using Error::Error;
};

class EmptyExperiment : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace wassdep
