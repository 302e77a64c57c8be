#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "emeval/errors.hpp"
#include "emeval/label.hpp"
#include "emeval/lexicon.hpp"
#include "emeval/prompts.hpp"

namespace emeval {

// One free-form model output to extract labels from.
struct RawResponse {
  std::string sample_id;
  std::string text;
};

namespace detail {

// Lowercased word tokens under the same character rules as normalize_label,
// so extraction is insensitive to casing, punctuation, and repeated spaces.
inline std::vector<std::string> tokenize_text(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    while (!cur.empty() && cur.front() == '-') cur.erase(cur.begin());
    while (!cur.empty() && cur.back() == '-') cur.pop_back();
    if (!cur.empty()) tokens.push_back(cur);
    cur.clear();
  };
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      cur.push_back(static_cast<char>(std::isupper(c) ? std::tolower(c) : c));
    } else if (c == '-' && !cur.empty()) {
      cur.push_back('-');
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

inline std::vector<std::string> split_words(const EmotionLabel& phrase) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : phrase) {
    if (c == ' ') {
      if (!cur.empty()) words.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) words.push_back(cur);
  return words;
}

}  // namespace detail

// Greedy longest-match scan over whole word tokens: at each position the
// longest lexicon phrase starting there wins and its tokens are consumed.
// "unhappy" never matches "happy" because matches are whole tokens.
inline LabelSet extract_labels_lexicon(const RawResponse& r, const Lexicon& lex) {
  // Phrases indexed by first word; longer phrases tried first.
  std::map<std::string, std::vector<std::vector<std::string>>> by_first;
  for (const auto& phrase : lex.phrases) {
    auto words = detail::split_words(phrase);
    if (!words.empty()) by_first[words.front()].push_back(std::move(words));
  }
  for (auto& [first, phrases] : by_first) {
    std::sort(phrases.begin(), phrases.end(),
              [](const auto& a, const auto& b) { return a.size() > b.size(); });
  }

  const auto tokens = detail::tokenize_text(r.text);
  LabelSet found;
  std::size_t i = 0;
  while (i < tokens.size()) {
    auto it = by_first.find(tokens[i]);
    std::size_t advance = 1;
    if (it != by_first.end()) {
      for (const auto& words : it->second) {
        if (i + words.size() <= tokens.size() &&
            std::equal(words.begin(), words.end(), tokens.begin() + i)) {
          std::string phrase;
          for (const auto& w : words) {
            if (!phrase.empty()) phrase += ' ';
            phrase += w;
          }
          found.insert(phrase);
          advance = words.size();
          break;
        }
      }
    }
    i += advance;
  }
  return found;
}

// Extracts the first bracketed comma-separated list, tolerating surrounding
// prose and optional quotes. Items are normalized; items that normalize to
// nothing are dropped. Throws MalformedReply when no bracketed list exists.
inline LabelSet parse_label_list(std::string_view text) {
  auto open = text.find('[');
  if (open == std::string_view::npos) {
    throw MalformedReply("no bracketed list in reply: \"" + std::string(text) + "\"");
  }
  auto close = text.find(']', open + 1);
  if (close == std::string_view::npos) {
    throw MalformedReply("unterminated list in reply: \"" + std::string(text) + "\"");
  }
  std::string_view body = text.substr(open + 1, close - open - 1);
  LabelSet out;
  std::size_t start = 0;
  while (start <= body.size()) {
    auto comma = body.find(',', start);
    std::string_view item =
        comma == std::string_view::npos ? body.substr(start) : body.substr(start, comma - start);
    try {
      out.insert(normalize_label(item));
    } catch (const EmptyLabelError&) {
      // Quotes and stray separators normalize away; skip empty items.
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// Majority valence over the label set: the valence with the most labels wins;
// unknown labels count as neutral; any tie for first place, or an empty set,
// is neutral.
inline SentimentPolarity classify_sentiment(const LabelSet& labels, const Lexicon& lex) {
  std::size_t votes[3] = {0, 0, 0};
  for (const auto& label : labels) {
    votes[static_cast<std::size_t>(lex.valence_of(label))] += 1;
  }
  const std::size_t top = std::max({votes[0], votes[1], votes[2]});
  if (top == 0) return SentimentPolarity::neutral;
  int winners = 0;
  SentimentPolarity winner = SentimentPolarity::neutral;
  for (int v = 0; v < 3; ++v) {
    if (votes[v] == top) {
      ++winners;
      winner = static_cast<SentimentPolarity>(v);
    }
  }
  return winners == 1 ? winner : SentimentPolarity::neutral;
}

}  // namespace emeval
