#pragma once

// Typed error hierarchy.  Every throw site uses the most specific type so
// callers (and the CLI exit-code mapping) can distinguish usage mistakes,
// bad input data, and corrupted artifacts without string matching.

#include <stdexcept>
#include <string>

namespace pf {

// Root of all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Mismatched tensor shapes, ranks, or widths ("matmul: inner dimensions 3 vs 4").
struct ShapeError : Error {
    using Error::Error;
};

// A size cap was exceeded (e.g. the materialized closed-form operator).
struct SizeError : Error {
    using Error::Error;
};

// Out-of-range stage, branch, class, or element index.
struct IndexError : Error {
    using Error::Error;
};

// Invalid or inconsistent run configuration (unknown key, bad value, bad combination).
struct ConfigError : Error {
    using Error::Error;
};

// Dataset content problems: missing files, counts that disagree, bad labels.
struct DataError : Error {
    using Error::Error;
};

// Malformed serialized bytes (bad magic, truncated header, nonsense field).
struct FormatError : Error {
    using Error::Error;
};

// Checkpoint payload fails its checksum or is truncated mid-tensor.
struct IntegrityError : FormatError {
    using FormatError::FormatError;
};

// Checkpoint was written by an unsupported format version.
struct VersionError : FormatError {
    using FormatError::FormatError;
};

// Checkpoint is well-formed but does not describe the expected model
// (missing tensor, wrong dtype, wrong extents).
struct SchemaError : FormatError {
    using FormatError::FormatError;
};

// Operating-system level I/O failure (cannot open, short write).
struct IoError : Error {
    using Error::Error;
};

}  // namespace pf
