#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 and hashing helpers shared by every module.
namespace ragfce::text {

/// Decodes UTF-8 into Unicode scalar values. Throws Error(Parse) on
/// malformed input.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);
void append_utf8(std::string& out, char32_t cp);

/// Number of Unicode scalar values (not bytes).
std::size_t scalar_count(std::string_view s);

bool is_space(char32_t cp);

/// Trims ASCII and Unicode whitespace (including U+3000) from both ends.
std::string trim(std::string_view s);
std::string_view trim_view(std::string_view s);

std::string ascii_lower(std::string_view s);
std::string ascii_upper(std::string_view s);

/// Splits on '\n' and strips a trailing '\r' from each line.
std::vector<std::string> split_lines(std::string_view s);

/// At most `max_bytes` bytes of `s`, cut back to a character boundary.
std::string_view utf8_prefix(std::string_view s, std::size_t max_bytes);

bool starts_with(std::string_view s, std::string_view prefix);
bool contains(std::string_view s, std::string_view needle);

/// Fixed-point rendering, e.g. fixed(93.375, 2) == "93.38" (printf rounding).
std::string fixed(double v, int decimals);

/// Left-pads or right-pads to a display width counted in scalar values.
std::string pad_right(std::string_view s, std::size_t width);
std::string pad_left(std::string_view s, std::size_t width);

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

/// Fraction of the distinct character 3-grams of `source` that occur in
/// `candidate`. Returns 1.0 when `source` has fewer than three characters.
double trigram_overlap(std::string_view source, std::string_view candidate);

}  // namespace ragfce::text
