#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pnd {

// Shortest text that parses back to the same double.
std::string format_double(double v);
bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, std::int64_t& out);
std::string_view trim(std::string_view s);
std::vector<std::string_view> split_fields(std::string_view line);

}  // namespace pnd
