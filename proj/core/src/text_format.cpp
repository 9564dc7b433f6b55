#include "viscest/text_format.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>

#include "viscest/errors.hpp"

namespace viscest {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view token) {
  if (token == "nan") return std::nan("");
  if (token == "inf") return INFINITY;
  if (token == "-inf") return -INFINITY;
  double value = 0.0;
  const char* end = token.data() + token.size();
  const auto res = std::from_chars(token.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw FormatError("not a number: '" + std::string(token) + "'");
  }
  return value;
}

long long parse_integer(std::string_view token) {
  long long value = 0;
  const char* end = token.data() + token.size();
  const auto res = std::from_chars(token.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw FormatError("not an integer: '" + std::string(token) + "'");
  }
  return value;
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace viscest
