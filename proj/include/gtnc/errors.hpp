#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gtnc {

/// Base class for every error thrown by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Incompatible index extents or mismatched geometries.
struct DimensionError : Error {
    using Error::Error;
};

/// Invalid argument values (repeated indices, bad factors, labels out of range).
struct ArgumentError : Error {
    using Error::Error;
};

/// Input value outside its mathematical domain (e.g. pixel outside [0,1]).
struct DomainError : Error {
    using Error::Error;
};

/// Malformed file contents: bad magic, unsupported version, checksum failure.
struct FormatError : Error {
    using Error::Error;
};

/// Files that individually parse but disagree with each other.
struct ConsistencyError : Error {
    using Error::Error;
};

/// Missing, unreadable or truncated files.
struct IoError : Error {
    using Error::Error;
};

/// Training failed (diverged, or hit a singular configuration).
struct TrainingError : Error {
    using Error::Error;
};

/// A sample has exactly zero amplitude under the current model; the NLL cost
/// and its gradient are undefined there. Carries the offending sample index.
struct ZeroAmplitudeError : TrainingError {
    std::size_t sample_index;
    ZeroAmplitudeError(const std::string& msg, std::size_t sample)
        : TrainingError(msg), sample_index(sample) {}
};

/// Operation on a zero-norm (degenerate) state.
struct DegenerateStateError : Error {
    using Error::Error;
};

} // namespace gtnc
