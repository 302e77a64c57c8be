#pragma once

#include <cctype>
#include <set>
#include <string>
#include <string_view>

#include "emeval/errors.hpp"

namespace emeval {

// A normalized emotion word or phrase: lowercase, single internal spaces,
// no punctuation except hyphens between word characters. Multi-word labels
// ("caught off guard") are first-class.
using EmotionLabel = std::string;

// Unordered in spirit; std::set keeps iteration deterministic.
using LabelSet = std::set<EmotionLabel>;

namespace detail {

inline bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Word characters: ASCII alphanumerics plus any non-ASCII byte, so UTF-8
// labels pass through untouched.
inline bool is_word_byte(unsigned char c) {
  return std::isalnum(c) != 0 || c >= 0x80;
}

}  // namespace detail

// Lowercases, strips punctuation (hyphens survive only between word
// characters), collapses whitespace, and trims. Throws EmptyLabelError when
// no alphabetic content remains.
inline EmotionLabel normalize_label(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool has_alpha = false;
  bool pending_space = false;
  bool pending_hyphen = false;
  for (unsigned char c : raw) {
    if (detail::is_word_byte(c)) {
      if (!out.empty()) {
        if (pending_space) {
          out.push_back(' ');
        } else if (pending_hyphen) {
          out.push_back('-');
        }
      }
      pending_space = pending_hyphen = false;
      if (std::isalpha(c) != 0 || c >= 0x80) has_alpha = true;
      out.push_back(static_cast<char>(std::isupper(c) ? std::tolower(c) : c));
    } else if (c == '-') {
      // Only internal single hyphens survive; runs collapse to one.
      if (!out.empty() && !pending_space) pending_hyphen = true;
    } else {
      // Whitespace and all other punctuation act as separators.
      if (!out.empty()) pending_space = true;
      pending_hyphen = false;
    }
  }
  if (out.empty() || !has_alpha) {
    throw EmptyLabelError("label is empty after normalization: \"" + std::string(raw) + "\"");
  }
  return out;
}

// True when normalize_label(s) would return s unchanged.
inline bool is_normalized(std::string_view s) {
  if (s.empty()) return false;
  try {
    return normalize_label(s) == s;
  } catch (const EmptyLabelError&) {
    return false;
  }
}

}  // namespace emeval
