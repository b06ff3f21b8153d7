#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "tomsyn/error.hpp"

// Text round-trip helpers. Floats are printed with std::to_chars shortest
// form, which parses back to the identical bit pattern — every bit-exact
// file format in this project leans on that guarantee.
namespace tomsyn {

template <typename F>
std::string fmt_float(F value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

template <typename F>
F parse_float(std::string_view s, const char* what) {
  F value{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw IntegrityError(std::string("bad float for ") + what + ": '" +
                         std::string(s) + "'");
  }
  return value;
}

template <typename I>
I parse_int(std::string_view s, const char* what) {
  I value{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw IntegrityError(std::string("bad integer for ") + what + ": '" +
                         std::string(s) + "'");
  }
  return value;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace tomsyn
