#pragma once

#include <stdexcept>
#include <string>

namespace qim {

/// Raised when a configuration or input violates a documented invariant.
/// The message names the offending field first.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Precondition failures in the analysis operations (mismatched stacks,
/// incompatible geometry, undefined ratios).
class AnalysisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or unreadable files. `kind` lets callers distinguish the
/// specific QIFS/PGM failure without string matching.
class FormatError : public std::runtime_error {
public:
    enum class Kind {
        io,
        bad_magic,
        version_mismatch,
        truncated,
        dimension_overflow,
        invalid_dimensions,
        trailing_data,
        nonzero_padding,
        malformed_header,
        unsupported_maxval,
        malformed_json,
    };

    FormatError(Kind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

} // namespace qim
