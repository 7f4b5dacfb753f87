#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace focalspec {

/// Bad user input: malformed files, out-of-range indices, inconsistent shapes.
/// The CLI maps this to exit code 2; anything else is an internal error.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure while processing one row of a light field.
class RowError : public std::runtime_error {
public:
    RowError(std::size_t row, const std::string& what)
        : std::runtime_error("row " + std::to_string(row) + ": " + what), row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

}  // namespace focalspec
