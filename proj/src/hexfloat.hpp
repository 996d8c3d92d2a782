#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

namespace cwss {

/// C99 "%a"-style text, e.g. "0x1.8p+1", "-0x0p+0". Exact for every finite double.
inline std::string to_hex(double v) {
  char buf[64];
  std::string out;
  if (std::signbit(v)) {
    out.push_back('-');
    v = -v;
  }
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
  out += "0x";
  out.append(buf, ptr);
  return out;
}

/// Parses the output of to_hex. Rejects non-finite values and trailing junk.
inline std::optional<double> from_hex(std::string_view s) {
  bool negative = false;
  if (!s.empty() && s.front() == '-') {
    negative = true;
    s.remove_prefix(1);
  }
  if (s.size() < 3 || s[0] != '0' || (s[1] != 'x' && s[1] != 'X')) return std::nullopt;
  s.remove_prefix(2);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return negative ? -v : v;
}

}  // namespace cwss
