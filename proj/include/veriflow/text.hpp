#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared by the prompt, parser and report code.
namespace veriflow::text {

/// 64-bit FNV-1a. Stable across platforms and runs; used for fixture keys and audit digests.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 14695981039346656037ULL);

/// fnv1a64 rendered as 16 lowercase hex digits.
std::string hash_hex(std::string_view data);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Fixed-point rendering with `decimals` digits after the point.
std::string format_fixed(double value, int decimals);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string_view> split_lines(std::string_view s);

/// Sentence-ish segmentation on '.', '!' and '?' followed by whitespace or end of text.
std::vector<std::string> split_sentences(std::string_view s);

std::vector<std::string> split_words(std::string_view s);

bool contains(std::string_view haystack, std::string_view needle);

}  // namespace veriflow::text
