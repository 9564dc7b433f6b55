#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace viscest {

/// Shortest decimal string that parses back to exactly `x`; "nan"/"inf" for
/// non-finite values.
std::string format_double(double x);

/// Strict parse of a full token; throws FormatError on trailing garbage.
double parse_double(std::string_view token);
long long parse_integer(std::string_view token);

std::vector<std::string_view> split_whitespace(std::string_view line);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace viscest
