#pragma once

#include <stdexcept>
#include <string>

namespace aar {

// Error taxonomy shared across the library. Callers that can recover from a
// specific condition (e.g. a degenerate mini-batch during training) catch the
// narrow type; everything else propagates.

struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// MAD of a score batch is zero, so modified z-scores are undefined.
struct DegenerateSpread : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// All samples identical (or otherwise unusable) for a mixture fit.
struct DegenerateInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bracketed root search found no sign change.
struct NoRoot : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace aar
