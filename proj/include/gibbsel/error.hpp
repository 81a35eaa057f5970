#pragma once

#include <stdexcept>
#include <string>

namespace gibbsel {

/// Bad arguments: shape mismatch, k larger than the table, empty inputs.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Exhaustive enumeration requested beyond the configured cap.
class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input that makes a statistical procedure ill-posed (constant axis,
/// fewer distinct values than clusters, a single observed class).
class DegenerateInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnsupportedChannel : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed PGM/CSV/JSON input.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gibbsel
