#pragma once

// Text normalization shared by the inverted index, the planner and the
// reference scorer: Unicode NFC, lowercase, split on anything that is not a
// letter or digit. No stemming, no stop words.

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

namespace momentsearch::text {

namespace detail {

inline icu::UnicodeString nfc(const icu::UnicodeString& in) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) {
    return in;
  }
  icu::UnicodeString out = norm->normalize(in, status);
  return U_FAILURE(status) ? in : out;
}

}  // namespace detail

/// Normalized tokens of a UTF-8 string, in order of appearance.
inline std::vector<std::string> tokenize(std::string_view utf8) {
  std::vector<std::string> tokens;
  if (utf8.empty()) {
    return tokens;
  }
  icu::UnicodeString s = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  s = detail::nfc(s);
  s.toLower(icu::Locale::getRoot());
  s = detail::nfc(s);

  icu::UnicodeString current;
  auto flush = [&] {
    if (!current.isEmpty()) {
      std::string out;
      current.toUTF8String(out);
      tokens.push_back(std::move(out));
      current.remove();
    }
  };
  for (int32_t i = 0; i < s.length();) {
    UChar32 c = s.char32At(i);
    if (u_isalnum(c) || u_getCombiningClass(c) != 0 ||
        u_charType(c) == U_NON_SPACING_MARK || u_charType(c) == U_COMBINING_SPACING_MARK) {
      current.append(c);
    } else {
      flush();
    }
    i += U16_LENGTH(c);
  }
  flush();
  return tokens;
}

/// Decodes UTF-8 into code points; invalid sequences become U+FFFD.
inline std::u32string to_u32(std::string_view utf8) {
  std::u32string out;
  out.reserve(utf8.size());
  int32_t i = 0;
  const auto* bytes = reinterpret_cast<const uint8_t*>(utf8.data());
  const auto len = static_cast<int32_t>(utf8.size());
  while (i < len) {
    UChar32 c;
    U8_NEXT(bytes, i, len, c);
    out.push_back(c < 0 ? U'�' : static_cast<char32_t>(c));
  }
  return out;
}

inline std::size_t codepoint_length(std::string_view utf8) {
  std::size_t n = 0;
  for (unsigned char c : utf8) {
    if ((c & 0xC0) != 0x80) {
      ++n;
    }
  }
  return n;
}

/// Levenshtein distance, giving up once it provably exceeds `limit`.
/// Returns limit + 1 in that case.
inline std::size_t bounded_levenshtein(std::u32string_view a, std::u32string_view b,
                                       std::size_t limit) {
  if (a.size() > b.size()) {
    std::swap(a, b);
  }
  if (b.size() - a.size() > limit) {
    return limit + 1;
  }
  std::vector<std::size_t> prev(a.size() + 1), cur(a.size() + 1);
  for (std::size_t i = 0; i <= a.size(); ++i) {
    prev[i] = i;
  }
  for (std::size_t j = 1; j <= b.size(); ++j) {
    cur[0] = j;
    std::size_t row_min = cur[0];
    for (std::size_t i = 1; i <= a.size(); ++i) {
      const std::size_t sub = prev[i - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[i] = std::min({prev[i] + 1, cur[i - 1] + 1, sub});
      row_min = std::min(row_min, cur[i]);
    }
    if (row_min > limit) {
      return limit + 1;
    }
    std::swap(prev, cur);
  }
  return std::min(prev[a.size()], limit + 1);
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) {
      out += sep;
    }
    out += parts[i];
  }
  return out;
}

}  // namespace momentsearch::text
