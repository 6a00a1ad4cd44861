#include "winnow/util.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

namespace winnow {

std::string truncate_words(const std::string& text, std::size_t max_words,
                           bool* truncated) {
  std::string out;
  out.reserve(text.size());
  std::size_t words = 0;
  std::size_t i = 0;
  const std::size_t n = text.size();
  bool cut = false;
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= n) break;
    if (words == max_words) {
      cut = true;
      break;
    }
    if (words > 0) out.push_back(' ');
    while (i < n && !std::isspace(static_cast<unsigned char>(text[i]))) {
      out.push_back(text[i]);
      ++i;
    }
    ++words;
  }
  if (truncated) *truncated = cut;
  return out;
}

std::vector<std::string> split_whitespace(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size()) break;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    fields.emplace_back(line.substr(start, i - start));
  }
  return fields;
}

bool parse_double_strict(std::string_view field, double& out) {
  if (field.empty()) return false;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool parse_int_strict(std::string_view field, long long& out) {
  if (field.empty()) return false;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  // The program never calls setlocale, so '%f' emits '.'; normalize anyway in
  // case a host library changed LC_NUMERIC behind our back.
  for (char& c : buf) {
    if (c == ',') c = '.';
    if (c == '\0') break;
  }
  return buf;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= 0x100000001b3ull;
  }
  return state;
}

std::string to_hex(std::uint64_t value) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

}  // namespace winnow
