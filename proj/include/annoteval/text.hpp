#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "annoteval/error.hpp"

// Code-point level text utilities. All span arithmetic in this project is in
// Unicode code points over the target/source texts, never bytes.

namespace annoteval {

inline std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  auto cont = [&](std::size_t k) {
    return k < s.size() && (static_cast<unsigned char>(s[k]) & 0xC0) == 0x80;
  };
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    char32_t cp = 0;
    std::size_t len = 0;
    if (c < 0x80) {
      cp = c;
      len = 1;
    } else if ((c & 0xE0) == 0xC0 && cont(i + 1)) {
      cp = (c & 0x1Fu) << 6 | (s[i + 1] & 0x3Fu);
      len = 2;
      if (cp < 0x80) len = 0;
    } else if ((c & 0xF0) == 0xE0 && cont(i + 1) && cont(i + 2)) {
      cp = (c & 0x0Fu) << 12 | (s[i + 1] & 0x3Fu) << 6 | (s[i + 2] & 0x3Fu);
      len = 3;
      if (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF)) len = 0;
    } else if ((c & 0xF8) == 0xF0 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
      cp = (c & 0x07u) << 18 | (s[i + 1] & 0x3Fu) << 12 |
           (s[i + 2] & 0x3Fu) << 6 | (s[i + 3] & 0x3Fu);
      len = 4;
      if (cp < 0x10000 || cp > 0x10FFFF) len = 0;
    }
    if (len == 0)
      throw Error(ErrorCode::BadFormat, "invalid UTF-8 sequence")
          .with("byte_offset", static_cast<long long>(i));
    out.push_back(cp);
    i += len;
  }
  return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

inline std::string encode_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) append_utf8(out, cp);
  return out;
}

inline std::size_t count_code_points(std::string_view s) {
  std::size_t n = 0;
  for (char c : s)
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
  return n;
}

inline bool is_space_cp(char32_t cp) {
  switch (cp) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\f': case U'\v':
    case 0x00A0: case 0x2007: case 0x2009: case 0x200A: case 0x202F:
    case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x2006;
  }
}

/// Uppercase test covering ASCII plus the Latin-1 range used in French.
inline bool is_upper_cp(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return true;
  if (cp >= 0x00C0 && cp <= 0x00D6) return true;   // À..Ö
  if (cp >= 0x00D8 && cp <= 0x00DE) return true;   // Ø..Þ
  return cp == 0x0152 || cp == 0x0178;             // Œ, Ÿ
}

inline char32_t to_lower_cp(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 32;
  if (cp >= 0x00C0 && cp <= 0x00D6) return cp + 32;
  if (cp >= 0x00D8 && cp <= 0x00DE) return cp + 32;
  if (cp == 0x0152) return 0x0153;
  if (cp == 0x0178) return 0x00FF;
  return cp;
}

/// Map typographic apostrophes, quotes and dashes to their ASCII forms.
inline char32_t ascii_fold_cp(char32_t cp) {
  switch (cp) {
    case 0x2018: case 0x2019: case 0x02BC: case 0x2032:
      return U'\'';
    case 0x201C: case 0x201D: case 0x201E: case 0x00AB: case 0x00BB:
      return U'"';
    case 0x2010: case 0x2011: case 0x2012: case 0x2013: case 0x2014:
    case 0x2015: case 0x2212:
      return U'-';
    default:
      return cp;
  }
}

inline bool is_sentence_punct_cp(char32_t cp) {
  switch (cp) {
    case U'.': case U',': case U'!': case U'?': case U';': case U':':
    case 0x2026:  // …
      return true;
    default:
      return false;
  }
}

/// Number of whitespace-separated tokens (the naive word count).
inline std::size_t count_words(std::u32string_view s) {
  std::size_t n = 0;
  bool in_tok = false;
  for (char32_t cp : s) {
    if (is_space_cp(cp)) {
      in_tok = false;
    } else if (!in_tok) {
      in_tok = true;
      ++n;
    }
  }
  return n;
}

/// A normalized view of a text where each normalized code point remembers the
/// half-open range of original code points it stands for. Whitespace runs
/// collapse to one space, letters are lowercased, typographic punctuation is
/// folded to ASCII.
struct NormalizedText {
  std::u32string text;
  std::vector<std::pair<std::size_t, std::size_t>> origin;  // per norm cp

  static NormalizedText build(std::u32string_view src, std::size_t base = 0) {
    NormalizedText out;
    std::size_t i = 0;
    while (i < src.size()) {
      if (is_space_cp(src[i])) {
        std::size_t j = i;
        while (j < src.size() && is_space_cp(src[j])) ++j;
        out.text.push_back(U' ');
        out.origin.emplace_back(base + i, base + j);
        i = j;
      } else {
        out.text.push_back(ascii_fold_cp(to_lower_cp(src[i])));
        out.origin.emplace_back(base + i, base + i + 1);
        ++i;
      }
    }
    return out;
  }
};

}  // namespace annoteval
