#pragma once

#include <stdexcept>
#include <string>

namespace translab {

// Shape/extent disagreement between operands.
struct dimension_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed caller-provided data (bad one-hot, single-class score list, ...).
struct input_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid or inconsistent configuration.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Object not in the state an operation requires (e.g. missing gradient).
struct state_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// API misuse (e.g. backward on a non-scalar).
struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unparseable external file.
struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace translab
