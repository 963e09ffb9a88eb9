#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chopstick::text {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

/// Full-string numeric parse; rejects trailing junk, empty input, nan/inf.
std::optional<double> parse_double(std::string_view s);

/// Shortest representation that parses back to the identical double.
std::string format_double(double v);

/// Fixed-point with the given number of decimals.
std::string format_fixed(double v, int decimals);

}  // namespace chopstick::text
