#pragma once

// Minimal UTF-8 helpers. Only what the tokenizer and chrF need: decoding to
// code points, whitespace/punctuation classes and simple lowercasing.

#include <string>
#include <string_view>
#include <vector>

namespace xlf::unicode {

/// Decodes UTF-8. Invalid bytes decode to U+FFFD, one per byte.
std::u32string decode(std::string_view utf8);

std::string encode(char32_t cp);
std::string encode(std::u32string_view cps);

bool is_space(char32_t cp);
bool is_punct(char32_t cp);

/// Simple one-to-one lowercase mapping for Latin, Greek and Cyrillic.
/// Scripts without case (Devanagari, CJK) pass through.
char32_t to_lower(char32_t cp);

std::string to_lower(std::string_view utf8);

}  // namespace xlf::unicode
