#pragma once

#include <string>
#include <string_view>

#include "emeval/label.hpp"

namespace emeval {

// Wire contracts for the chat-completion endpoints. The templates are fixed
// byte strings; builders only append the variable payload, so prompt length
// is always template length plus payload length.

inline constexpr std::string_view kLabelExtractionPrompt =
    "Please assume the role of an expert in the field of emotions. We provide "
    "clues that may be related to the emotions of the characters. Based on the "
    "provided clues, please identify the emotional states of the main "
    "character. Please separate different emotional categories with commas and "
    "output only the clearly identifiable emotional categories in a list "
    "format. If none are identified, please output an empty list.";

inline constexpr std::string_view kSentimentPrompt =
    "Please act as an expert in the field of emotions. We provide a few words "
    "to describe the emotions of a character. Please choose the most likely "
    "sentiment from the given candidates: [positive, negative, neutral].";

inline constexpr std::string_view kClueMergePrompt =
    "Please act as an expert in the field of emotions. We provide acoustic and "
    "visual clues that may be related to the character's emotional state, "
    "along with the original subtitle of the video. Please analyze which parts "
    "can infer the emotional state and explain the reasons. During the "
    "analysis, please integrate the textual, audio, and visual clues.";

inline constexpr std::string_view kExtractionClueHeader = "\n\nClues:\n";
inline constexpr std::string_view kSentimentWordsHeader = "\n\nWords: ";

// Renders a LabelSet as "[a, b, c]"; the inverse of parse_label_list.
inline std::string render_list(const LabelSet& labels) {
  std::string out = "[";
  bool first = true;
  for (const auto& label : labels) {
    if (!first) out += ", ";
    out += label;
    first = false;
  }
  out += "]";
  return out;
}

inline std::string build_extraction_prompt(std::string_view response_text) {
  std::string out;
  out.reserve(kLabelExtractionPrompt.size() + kExtractionClueHeader.size() +
              response_text.size());
  out.append(kLabelExtractionPrompt);
  out.append(kExtractionClueHeader);
  out.append(response_text);
  return out;
}

inline std::string build_sentiment_prompt(const LabelSet& labels) {
  std::string out(kSentimentPrompt);
  out.append(kSentimentWordsHeader);
  out.append(render_list(labels));
  return out;
}

inline std::string build_clue_merge_prompt(std::string_view audio_clue,
                                           std::string_view video_clue,
                                           std::string_view subtitle) {
  std::string out(kClueMergePrompt);
  out.append("\n\nAudio clues:\n").append(audio_clue);
  out.append("\n\nVisual clues:\n").append(video_clue);
  out.append("\n\nSubtitle:\n").append(subtitle);
  return out;
}

}  // namespace emeval
