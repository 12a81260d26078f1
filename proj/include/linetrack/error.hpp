#pragma once

#include <stdexcept>
#include <string>

namespace linetrack {

/// Unreadable or unwritable file.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed file content; the message names the offending field.
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid parameter value or unknown configuration key.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Domain error raised by the evaluation metrics (empty ground truth,
/// mismatched raster sizes, degenerate segments).
struct EvalError : std::runtime_error {
    explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace linetrack
