#pragma once

#include <stdexcept>
#include <string>

namespace maple {

// Exit-code contract used by the CLI: validation/usage problems map to 3,
// environment/measurement problems to 2, anything else to 1.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad argument values, out-of-range ids, mismatched dimensions.
struct DomainError : Error {
    using Error::Error;
};

// Malformed one-hot encodings.
struct EncodingError : DomainError {
    using DomainError::DomainError;
};

// Tensor / layer dimension mismatches.
struct ShapeError : DomainError {
    using DomainError::DomainError;
};

// Malformed input files; carries a 1-based line number when known.
struct ParseError : Error {
    ParseError(const std::string& what, long line = 0)
        : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what), line_number(line) {}
    long line_number = 0;
};

// Semantically invalid but well-formed input (e.g. sample references an
// unknown device).
struct ValidationError : Error {
    using Error::Error;
};

// The platform cannot provide a requested facility (perf interface missing,
// insufficient permission). Carries the OS reason.
struct UnsupportedError : Error {
    using Error::Error;
};

// A measurement could not be taken.
struct MeasurementError : Error {
    using Error::Error;
};

// Training produced a non-finite loss.
struct TrainingDivergenceError : Error {
    TrainingDivergenceError(const std::string& what, int epoch_at)
        : Error(what + " (epoch " + std::to_string(epoch_at) + ")"), epoch(epoch_at) {}
    int epoch = 0;
};

// Missing or unreadable/unwritable files.
struct IoError : Error {
    using Error::Error;
};

// Bad command-line usage beyond what the parser catches.
struct UsageError : Error {
    using Error::Error;
};

}  // namespace maple
