#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "emeval/errors.hpp"
#include "emeval/label.hpp"

namespace emeval {

enum class SentimentPolarity { positive, negative, neutral };

inline std::string to_string(SentimentPolarity p) {
  switch (p) {
    case SentimentPolarity::positive: return "positive";
    case SentimentPolarity::negative: return "negative";
    case SentimentPolarity::neutral: return "neutral";
  }
  return "neutral";
}

inline SentimentPolarity polarity_from_string(const std::string& s,
                                              const std::string& origin = {}) {
  if (s == "positive") return SentimentPolarity::positive;
  if (s == "negative") return SentimentPolarity::negative;
  if (s == "neutral") return SentimentPolarity::neutral;
  throw ParseError(origin + "unknown sentiment polarity \"" + s + "\"");
}

// Emotion phrases the deterministic extractor recognizes, each with a
// valence. Every valence key is a phrase by construction.
struct Lexicon {
  LabelSet phrases;
  std::map<EmotionLabel, SentimentPolarity> valence;

  void add(const EmotionLabel& phrase, SentimentPolarity v) {
    phrases.insert(phrase);
    valence[phrase] = v;
  }

  SentimentPolarity valence_of(const EmotionLabel& label) const {
    auto it = valence.find(label);
    return it == valence.end() ? SentimentPolarity::neutral : it->second;
  }
};

// Lexicon file format: one "label<TAB>valence" per line, UTF-8. Blank lines
// and lines starting with '#' are skipped.
inline Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  Lexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": expected \"label<TAB>valence\"");
    }
    EmotionLabel label;
    try {
      label = normalize_label(line.substr(0, tab));
    } catch (const EmptyLabelError& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    lex.add(label, polarity_from_string(line.substr(tab + 1),
                                        path.string() + ":" + std::to_string(lineno) + ": "));
  }
  return lex;
}

}  // namespace emeval
