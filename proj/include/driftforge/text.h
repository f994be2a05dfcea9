#ifndef DRIFTFORGE_TEXT_H_
#define DRIFTFORGE_TEXT_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace driftforge::text {

enum class UnitKind { kWord, kSpace, kSymbol };

// A lexical unit of a UTF-8 string: a maximal alphanumeric run (combining
// marks attach to the run they follow), a maximal whitespace run, or a single
// other code point. `norm` is the unit's normalized form: NFC + lowercase for
// words, " " for whitespace, NFC of the code point otherwise.
struct Unit {
  UnitKind kind;
  std::size_t begin;  // byte offsets into the source string
  std::size_t end;
  std::string norm;
};

std::vector<Unit> segment(std::string_view utf8);

// NFC, lowercase, whitespace collapsed, punctuation and whitespace stripped
// from both edges. Returns "" for strings with no content.
std::string normalize_term(std::string_view utf8);

std::string to_lower(std::string_view utf8);
std::string to_upper(std::string_view utf8);

// Capitalization pattern of a surface form, used to carry case over to a
// replacement term.
// kSentence is "Heart attack", kTitle is "Heart Attack".
enum class CasePattern { kLower, kSentence, kTitle, kUpper, kMixed };

CasePattern case_pattern(std::string_view utf8);
std::string apply_case(std::string_view utf8, CasePattern pattern);

// Trims ASCII whitespace.
std::string_view trim(std::string_view s);

}  // namespace driftforge::text

#endif  // DRIFTFORGE_TEXT_H_
