#pragma once

#include <stdexcept>
#include <string>

namespace rmdp {

/// Mismatched dimensions between an MDP, a policy, or a value vector.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the documented domain (negative lambda, off-simplex input, ...).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A model or file violates a structural invariant (row sums, reward range, ...).
class InvariantError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Requested combination is outside what a solver supports.
class UnsupportedError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Experiment configuration could not be resolved.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace rmdp
