#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hrfill::csv {

// Splits one CSV line on commas. No quoting; none of the formats here need it.
std::vector<std::string_view> split(std::string_view line);

// Strips a trailing '\r' so CRLF files parse like LF files.
std::string_view chomp(std::string_view line);

std::optional<double> parse_double(std::string_view field);
std::optional<std::int64_t> parse_int(std::string_view field);

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

}  // namespace hrfill::csv
