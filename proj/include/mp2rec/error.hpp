#pragma once

#include <stdexcept>
#include <string>

namespace mp2rec {

// Matrix/vector dimensions disagree.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// An id falls outside an embedding table or candidate set.
struct IndexError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// Malformed input file; message names the offending line.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A computation produced NaN/Inf where a finite value is required.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// API misuse: stale cache, missing target, mismatched state.
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

struct EmptyDatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Corrupt or incompatible serialized artifact (checkpoint, manifest).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace mp2rec
