#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dcl/errors.hpp"

namespace dcl {

enum class TokenizerMode { word, char_level };

namespace detail {

// Decodes one UTF-8 code point starting at s[i]; advances i. Bytes that do
// not form a valid sequence are passed through one at a time.
inline char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const unsigned char b0 = static_cast<unsigned char>(s[i]);
  std::size_t len = 1;
  char32_t cp = b0;
  if (b0 >= 0xF0)
    len = 4, cp = b0 & 0x07u;
  else if (b0 >= 0xE0)
    len = 3, cp = b0 & 0x0Fu;
  else if (b0 >= 0xC0)
    len = 2, cp = b0 & 0x1Fu;
  if (len > 1) {
    if (i + len > s.size()) {
      ++i;
      return b0;
    }
    for (std::size_t k = 1; k < len; ++k) {
      const unsigned char bk = static_cast<unsigned char>(s[i + k]);
      if ((bk & 0xC0u) != 0x80u) {
        ++i;
        return b0;
      }
      cp = (cp << 6) | (bk & 0x3Fu);
    }
  }
  i += len;
  return cp;
}

inline void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case U'\t':
    case U'\n':
    case U'\v':
    case U'\f':
    case U'\r':
    case U' ':
    case 0x0085:  // NEL
    case 0x00A0:  // no-break space
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

// Punctuation stripped from token edges: ASCII punctuation plus the common
// typographic and CJK marks that show up in the supported corpora.
inline bool is_strippable_punct(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  switch (cp) {
    case 0x00A1:  // inverted exclamation
    case 0x00BF:  // inverted question
    case 0x2018:
    case 0x2019:
    case 0x201C:
    case 0x201D:
    case 0x2013:
    case 0x2014:
    case 0x2026:
    case 0x3001:
    case 0x3002:
    case 0xFF01:
    case 0xFF0C:
    case 0xFF1A:
    case 0xFF1B:
    case 0xFF1F:
      return true;
    default:
      return false;
  }
}

inline char32_t to_lower(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 32;
  return cp;
}

}  // namespace detail

/// Splits text into token strings.
///
/// word mode: lowercase, split on Unicode whitespace, then strip leading and
/// trailing punctuation from each token (interior punctuation is kept, so
/// "card-payment" survives intact). Tokens that are all punctuation vanish.
///
/// char mode: one token per non-whitespace code point; fallback for scripts
/// without word boundaries.
inline std::vector<std::string> tokenize(std::string_view text, TokenizerMode mode) {
  std::vector<std::string> out;
  if (mode == TokenizerMode::char_level) {
    std::size_t i = 0;
    while (i < text.size()) {
      const char32_t cp = detail::decode_utf8(text, i);
      if (detail::is_unicode_space(cp)) continue;
      std::string tok;
      detail::encode_utf8(cp, tok);
      out.push_back(std::move(tok));
    }
    return out;
  }

  std::vector<char32_t> word;
  auto flush = [&] {
    if (word.empty()) return;
    std::size_t lo = 0, hi = word.size();
    while (lo < hi && detail::is_strippable_punct(word[lo])) ++lo;
    while (hi > lo && detail::is_strippable_punct(word[hi - 1])) --hi;
    if (lo < hi) {
      std::string tok;
      for (std::size_t k = lo; k < hi; ++k) detail::encode_utf8(word[k], tok);
      out.push_back(std::move(tok));
    }
    word.clear();
  };

  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = detail::decode_utf8(text, i);
    if (detail::is_unicode_space(cp)) {
      flush();
    } else {
      word.push_back(detail::to_lower(cp));
    }
  }
  flush();
  return out;
}

inline TokenizerMode tokenizer_mode_from_string(std::string_view s) {
  if (s == "word") return TokenizerMode::word;
  if (s == "char") return TokenizerMode::char_level;
  throw usage_error("unknown tokenizer mode: " + std::string(s) + " (expected word|char)");
}

}  // namespace dcl
