#pragma once

#include <stdexcept>
#include <string>

namespace id3 {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

struct ZeroNormError : Error {
    using Error::Error;
};

struct DimensionMismatchError : Error {
    using Error::Error;
};

struct TimeIndexError : Error {
    using Error::Error;
};

struct NumericalError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Malformed persisted data; `line` is 1-based, 0 when not line-oriented.
struct FormatError : Error {
    FormatError(const std::string& msg, std::size_t line_no)
        : Error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
    std::size_t line;
};

struct GridTooCoarseError : Error {
    using Error::Error;
};

struct EmptyDatasetError : Error {
    using Error::Error;
};

}  // namespace id3
