#pragma once

#include <stdexcept>
#include <string>

namespace oed {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class NonPositiveNoise : public Error {
public:
    using Error::Error;
};

class RankTooLarge : public Error {
public:
    using Error::Error;
};

class InvalidSpec : public Error {
public:
    using Error::Error;
};

class IndexOutOfRange : public Error {
public:
    using Error::Error;
};

class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

class CandidateAlreadySelected : public Error {
public:
    using Error::Error;
};

class StaleState : public Error {
public:
    using Error::Error;
};

class NumericalBreakdown : public Error {
public:
    using Error::Error;
};

class BudgetOutOfRange : public Error {
public:
    using Error::Error;
};

class EnumerationTooLarge : public Error {
public:
    using Error::Error;
};

/// Raised when the greedy solution falls below the (1 - 1/e) bound,
/// which theory rules out and therefore signals an implementation bug.
class GuaranteeViolation : public Error {
public:
    using Error::Error;
};

/// Configuration file is malformed or self-contradictory.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Problem file cannot be parsed, or the instance it describes is invalid.
class ProblemError : public Error {
public:
    using Error::Error;
};

} // namespace oed
