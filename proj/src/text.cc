#include "driftforge/text.h"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <stdexcept>

namespace driftforge::text {

namespace {

const icu::Normalizer2& nfc() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || n == nullptr) {
    throw std::runtime_error("ICU NFC normalizer unavailable");
  }
  return *n;
}

bool is_ascii(std::string_view s) {
  for (unsigned char c : s) {
    if (c >= 0x80) return false;
  }
  return true;
}

std::string to_utf8(const icu::UnicodeString& u) {
  std::string out;
  u.toUTF8String(out);
  return out;
}

icu::UnicodeString from_utf8(std::string_view s) {
  return icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
}

std::string nfc_lower(std::string_view s) {
  if (is_ascii(s)) {
    std::string out(s);
    for (char& c : out) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
  }
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString u = nfc().normalize(from_utf8(s), status);
  if (U_FAILURE(status)) return std::string(s);
  u.toLower(icu::Locale::getRoot());
  // Lowercasing can denormalize (e.g. U+0130), so recompose.
  icu::UnicodeString again = nfc().normalize(u, status);
  return to_utf8(U_FAILURE(status) ? u : again);
}

std::string nfc_only(std::string_view s) {
  if (is_ascii(s)) return std::string(s);
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString u = nfc().normalize(from_utf8(s), status);
  if (U_FAILURE(status)) return std::string(s);
  return to_utf8(u);
}

bool is_word_char(UChar32 c) { return u_isalnum(c) != 0; }

bool is_mark(UChar32 c) {
  const auto mask = U_GET_GC_MASK(c);
  return (mask & U_GC_M_MASK) != 0;
}

}  // namespace

std::vector<Unit> segment(std::string_view utf8) {
  std::vector<Unit> units;
  const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
  const auto length = static_cast<int32_t>(utf8.size());
  int32_t i = 0;
  while (i < length) {
    const int32_t start = i;
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c < 0) {
      // Invalid byte sequence: keep the raw bytes as an opaque symbol.
      units.push_back({UnitKind::kSymbol, static_cast<std::size_t>(start),
                       static_cast<std::size_t>(i),
                       std::string(utf8.substr(start, i - start))});
      continue;
    }
    if (is_word_char(c)) {
      int32_t end = i;
      while (end < length) {
        int32_t next = end;
        UChar32 d;
        U8_NEXT(s, next, length, d);
        if (d < 0 || !(is_word_char(d) || is_mark(d))) break;
        end = next;
      }
      i = end;
      units.push_back({UnitKind::kWord, static_cast<std::size_t>(start),
                       static_cast<std::size_t>(end),
                       nfc_lower(utf8.substr(start, end - start))});
    } else if (u_isUWhiteSpace(c)) {
      int32_t end = i;
      while (end < length) {
        int32_t next = end;
        UChar32 d;
        U8_NEXT(s, next, length, d);
        if (d < 0 || !u_isUWhiteSpace(d)) break;
        end = next;
      }
      i = end;
      units.push_back({UnitKind::kSpace, static_cast<std::size_t>(start),
                       static_cast<std::size_t>(end), " "});
    } else {
      // Marks following a symbol stay with it so NFC composes correctly.
      int32_t end = i;
      while (end < length) {
        int32_t next = end;
        UChar32 d;
        U8_NEXT(s, next, length, d);
        if (d < 0 || !is_mark(d)) break;
        end = next;
      }
      i = end;
      units.push_back({UnitKind::kSymbol, static_cast<std::size_t>(start),
                       static_cast<std::size_t>(end),
                       nfc_only(utf8.substr(start, end - start))});
    }
  }
  return units;
}

std::string normalize_term(std::string_view utf8) {
  const auto units = segment(utf8);
  auto strippable = [&](const Unit& u) {
    if (u.kind == UnitKind::kSpace) return true;
    if (u.kind == UnitKind::kWord) return false;
    UChar32 c;
    int32_t i = 0;
    const auto* p = reinterpret_cast<const uint8_t*>(u.norm.data());
    U8_NEXT(p, i, static_cast<int32_t>(u.norm.size()), c);
    return c < 0 || u_ispunct(c);
  };
  std::size_t first = 0;
  std::size_t last = units.size();
  while (first < last && strippable(units[first])) ++first;
  while (last > first && strippable(units[last - 1])) --last;
  std::string out;
  for (std::size_t k = first; k < last; ++k) out += units[k].norm;
  return out;
}

std::string to_lower(std::string_view utf8) {
  icu::UnicodeString u = from_utf8(utf8);
  u.toLower(icu::Locale::getRoot());
  return to_utf8(u);
}

std::string to_upper(std::string_view utf8) {
  icu::UnicodeString u = from_utf8(utf8);
  u.toUpper(icu::Locale::getRoot());
  return to_utf8(u);
}

CasePattern case_pattern(std::string_view utf8) {
  const icu::UnicodeString u = from_utf8(utf8);
  int upper = 0;
  int lower = 0;
  int words = 0;
  bool first_cased_upper = false;
  bool seen_cased = false;
  bool upper_after_first = false;
  bool word_initial_only = true;  // every upper letter opens a word, every word opens upper
  bool in_word = false;
  bool word_has_cased = false;
  for (int32_t i = 0; i < u.length();) {
    const UChar32 c = u.char32At(i);
    i += U16_LENGTH(c);
    if (!u_isalnum(c)) {
      in_word = false;
      continue;
    }
    if (!in_word) {
      in_word = true;
      word_has_cased = false;
    }
    const bool is_upper = u_isupper(c) || u_istitle(c);
    const bool is_lower = u_islower(c);
    if (!is_upper && !is_lower) continue;
    if (!word_has_cased) {
      word_has_cased = true;
      ++words;
      if (!is_upper) word_initial_only = false;
    } else if (is_upper) {
      word_initial_only = false;
    }
    if (!seen_cased) {
      seen_cased = true;
      first_cased_upper = is_upper;
    } else if (is_upper) {
      upper_after_first = true;
    }
    if (is_upper) ++upper;
    if (is_lower) ++lower;
  }
  if (upper == 0) return CasePattern::kLower;
  if (lower == 0) {
    // A lone capital ("A") reads as sentence case, not all-caps.
    return upper >= 2 ? CasePattern::kUpper : CasePattern::kSentence;
  }
  if (first_cased_upper && !upper_after_first) return CasePattern::kSentence;
  if (word_initial_only && words >= 2) return CasePattern::kTitle;
  return CasePattern::kMixed;
}

namespace {

// Lowercases, then uppercases the first cased letter of each word, or only
// of the first word.
std::string capitalize(std::string_view utf8, bool every_word) {
  icu::UnicodeString u = from_utf8(utf8);
  u.toLower(icu::Locale::getRoot());
  bool at_word_start = true;
  bool done = false;
  for (int32_t i = 0; i < u.length() && !done;) {
    const UChar32 c = u.char32At(i);
    int32_t len = U16_LENGTH(c);
    if (!u_isalnum(c)) {
      at_word_start = true;
    } else if (at_word_start && u_islower(c)) {
      icu::UnicodeString head = u.tempSubString(i, len);
      head.toUpper(icu::Locale::getRoot());
      u.replace(i, len, head);
      len = head.length();
      at_word_start = false;
      done = !every_word;
    } else if (u_isupper(c) || u_islower(c)) {
      at_word_start = false;
    }
    i += len;
  }
  return to_utf8(u);
}

}  // namespace

std::string apply_case(std::string_view utf8, CasePattern pattern) {
  switch (pattern) {
    case CasePattern::kLower:
      return to_lower(utf8);
    case CasePattern::kUpper:
      return to_upper(utf8);
    case CasePattern::kSentence:
      return capitalize(utf8, false);
    case CasePattern::kTitle:
      return capitalize(utf8, true);
    case CasePattern::kMixed:
      break;
  }
  return std::string(utf8);
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' ||
           c == '\v';
  };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace driftforge::text
