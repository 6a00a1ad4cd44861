#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace winnow {

// Keeps the first `max_words` whitespace-separated words; single spaces between
// words in the result. Sets *truncated when text was cut.
std::string truncate_words(const std::string& text, std::size_t max_words,
                           bool* truncated = nullptr);

std::vector<std::string> split_whitespace(std::string_view line);

// Locale-independent decimal parse (no thousands separators, '.' only).
// Returns false if the field is not a complete decimal number.
bool parse_double_strict(std::string_view field, double& out);
bool parse_int_strict(std::string_view field, long long& out);

// Fixed-point decimal formatting with '.' regardless of locale.
std::string format_fixed(double value, int decimals);

// FNV-1a: stable across platforms and runs, used for cache keys and
// artifact content hashes (not for security).
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ull);
std::string to_hex(std::uint64_t value);

}  // namespace winnow
