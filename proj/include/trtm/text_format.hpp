#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trtm {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Strict full-string parse; nullopt on trailing garbage or non-finite results.
std::optional<double> parse_double(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);

std::string_view trim(std::string_view text);

} // namespace trtm
