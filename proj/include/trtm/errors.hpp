#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trtm {

/// Malformed input text. `line()` is 1-based, or 0 when the error is not tied to a line.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(line == 0 ? what : what + " at line " + std::to_string(line)),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A version label is missing, empty or inconsistent with the run.
class LabelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two outcome sets that should be paired do not cover the same versions.
class AlignmentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace trtm
