#pragma once

#include <stdexcept>
#include <string>

namespace redas {

// Base for everything the library throws on bad input or broken invariants.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed text input (topology / GEMM / report files).
class ParseError : public Error {
public:
    using Error::Error;
};

// Well-formed input whose values violate a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Argument outside the operation's domain (bad shape, bad sub-array size, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// A configuration that cannot be wired onto the array (e.g. a lane without a
// perimeter bank).
class ConfigurationError : public Error {
public:
    using Error::Error;
};

// Internal invariant broken during simulation. Distinct from a wrong result,
// which is reported by verify().
class SimulationFault : public Error {
public:
    using Error::Error;
};

// The cycle-level simulation produced a product that differs from the
// reference multiplication.
class VerificationFailure : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace redas
