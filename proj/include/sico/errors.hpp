#pragma once

#include <stdexcept>

namespace sico {

// Error taxonomy shared by every module. Callers are expected to be able to
// tell these apart, so each failure class gets its own type.

// Structurally invalid configuration (layer shapes, criterion parameters...).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Caller passed arguments violating a precondition (shape mismatch, empty
// data, out-of-range values).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values appeared where finite math was required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A file did not match its declared binary or text format.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dataset content is unusable (degenerate channel, class too small...).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The adaptation loop cannot proceed (e.g. no confident region at stage 0).
struct AdaptationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An internal consistency check failed; indicates a bug, not bad input.
struct InternalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A metric is mathematically undefined for the given counts.
struct MetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sico
