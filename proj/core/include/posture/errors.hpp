#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace posture {

/// Base for every error the library throws on bad input data.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. `line()` is 1-based; 0 when the error is not tied to a line.
class ParseError : public Error {
public:
    enum class Kind {
        empty_input,
        bad_header,
        bad_timestamp,
        non_numeric,
        non_finite,
        non_monotonic,
        irregular_spacing,
        bad_label,
        overlapping_intervals,
        bad_field_count,
    };

    ParseError(Kind kind, std::size_t line, const std::string& what);

    Kind kind() const noexcept { return kind_; }
    std::size_t line() const noexcept { return line_; }

private:
    Kind kind_;
    std::size_t line_;
};

/// Input that parsed fine but violates a precondition (rates, subjects, class counts...).
class DataError : public Error {
public:
    using Error::Error;
};

/// A window whose statistics are undefined (zero vector magnitude). Such windows are dropped.
class DegenerateWindow : public Error {
public:
    using Error::Error;
};

}  // namespace posture
