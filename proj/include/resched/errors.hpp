#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace resched {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (e.g. digamma(0)).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Mismatched vector lengths or layouts.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A context has fewer rollouts than a leave-one-out baseline needs.
class InsufficientRolloutsError : public Error {
public:
    using Error::Error;
};

/// Too few contexts to estimate between-context variance.
class InsufficientContextsError : public Error {
public:
    using Error::Error;
};

/// All score weights vanish, so the weighted optimal baseline is undefined.
class DegenerateWeightsError : public Error {
public:
    using Error::Error;
};

/// An environment returned a non-finite reward.
class RolloutError : public Error {
public:
    RolloutError(std::size_t context, std::size_t rollout, const std::string& what)
        : Error("rollout (" + std::to_string(context) + ", " + std::to_string(rollout) + "): " + what),
          context_(context),
          rollout_(rollout) {}

    std::size_t context() const noexcept { return context_; }
    std::size_t rollout() const noexcept { return rollout_; }

private:
    std::size_t context_;
    std::size_t rollout_;
};

/// Malformed configuration or checkpoint input.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace resched
