#pragma once

// Line-delimited JSON record files: one object per line, UTF-8. Loaders
// report errors as "path:line: message".

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "emeval/curation.hpp"
#include "emeval/errors.hpp"
#include "emeval/extraction.hpp"
#include "emeval/label.hpp"
#include "emeval/lexicon.hpp"
#include "emeval/metrics.hpp"

namespace emeval {

namespace detail {

template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    try {
      fn(doc, lineno);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const EmptyLabelError& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline std::string require_sample_id(const nlohmann::json& doc,
                                     const std::filesystem::path& path, std::size_t lineno) {
  if (!doc.contains("sample_id") || !doc.at("sample_id").is_string() ||
      doc.at("sample_id").get<std::string>().empty()) {
    throw ParseError(path.string() + ":" + std::to_string(lineno) +
                     ": record needs a non-empty \"sample_id\"");
  }
  return doc.at("sample_id").get<std::string>();
}

inline LabelSet labels_from_json(const nlohmann::json& arr) {
  LabelSet out;
  for (const auto& l : arr) out.insert(normalize_label(l.get<std::string>()));
  return out;
}

}  // namespace detail

// {"sample_id": ..., "labels": [...]} — labels must be non-empty.
inline std::map<std::string, LabelSet> load_fine_grained_truth(
    const std::filesystem::path& path) {
  std::map<std::string, LabelSet> out;
  detail::for_each_jsonl(path, [&](const nlohmann::json& doc, std::size_t lineno) {
    auto id = detail::require_sample_id(doc, path, lineno);
    auto labels = detail::labels_from_json(doc.at("labels"));
    if (labels.empty()) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": ground-truth labels must be non-empty");
    }
    out[id] = std::move(labels);
  });
  return out;
}

// {"sample_id": ..., "label": "happy"}; validated against the dataset
// taxonomy when one is declared.
inline std::map<std::string, EmotionLabel> load_basic_truth(
    const std::filesystem::path& path, const std::optional<LabelSet>& taxonomy = {}) {
  std::map<std::string, EmotionLabel> out;
  detail::for_each_jsonl(path, [&](const nlohmann::json& doc, std::size_t lineno) {
    auto id = detail::require_sample_id(doc, path, lineno);
    auto label = normalize_label(doc.at("label").get<std::string>());
    if (taxonomy.has_value() && taxonomy->count(label) == 0) {
      throw InvariantViolation(path.string() + ":" + std::to_string(lineno) + ": label \"" +
                                   label + "\" is not in the dataset taxonomy",
                               label);
    }
    out[id] = std::move(label);
  });
  return out;
}

// {"sample_id": ..., "score": -1.5}; scores validated against the range.
inline std::map<std::string, double> load_sentiment_truth(const std::filesystem::path& path,
                                                          const ScoreRange& range) {
  std::map<std::string, double> out;
  detail::for_each_jsonl(path, [&](const nlohmann::json& doc, std::size_t lineno) {
    auto id = detail::require_sample_id(doc, path, lineno);
    const double score = doc.at("score").get<double>();
    if (score < range.lo || score > range.hi) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": score " +
                       std::to_string(score) + " outside the declared range");
    }
    out[id] = score;
  });
  return out;
}

// A model's output for one sample: precomputed labels, raw text to extract
// from, a direct sentiment, or any combination.
struct PredictionRecord {
  std::string sample_id;
  std::optional<LabelSet> labels;
  std::optional<std::string> text;
  std::optional<SentimentPolarity> sentiment;
};

inline std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
  std::vector<PredictionRecord> out;
  detail::for_each_jsonl(path, [&](const nlohmann::json& doc, std::size_t lineno) {
    PredictionRecord r;
    r.sample_id = detail::require_sample_id(doc, path, lineno);
    if (doc.contains("labels")) r.labels = detail::labels_from_json(doc.at("labels"));
    if (doc.contains("text")) r.text = doc.at("text").get<std::string>();
    if (doc.contains("sentiment")) {
      r.sentiment = polarity_from_string(
          doc.at("sentiment").get<std::string>(),
          path.string() + ":" + std::to_string(lineno) + ": ");
    }
    out.push_back(std::move(r));
  });
  return out;
}

inline std::vector<RawResponse> load_raw_responses(const std::filesystem::path& path) {
  std::vector<RawResponse> out;
  detail::for_each_jsonl(path, [&](const nlohmann::json& doc, std::size_t lineno) {
    out.push_back({detail::require_sample_id(doc, path, lineno),
                   doc.value("text", std::string())});
  });
  return out;
}

// Curation record. token_count is recomputed from the description when both
// are present and must agree; with no description the stored count is used.
inline std::vector<DescriptionRecord> load_description_records(
    const std::filesystem::path& path) {
  std::vector<DescriptionRecord> out;
  detail::for_each_jsonl(path, [&](const nlohmann::json& doc, std::size_t lineno) {
    DescriptionRecord r;
    r.sample_id = detail::require_sample_id(doc, path, lineno);
    r.description = doc.value("description", std::string());
    if (!r.description.empty()) {
      r.token_count = count_tokens(r.description);
      if (doc.contains("token_count") &&
          doc.at("token_count").get<std::size_t>() != r.token_count) {
        throw ParseError(path.string() + ":" + std::to_string(lineno) +
                         ": token_count does not match the description");
      }
    } else if (doc.contains("token_count")) {
      r.token_count = doc.at("token_count").get<std::size_t>();
    }
    if (doc.contains("av_match")) r.av_match = doc.at("av_match").get<bool>();
    if (doc.contains("labels")) r.description_labels = detail::labels_from_json(doc.at("labels"));
    if (doc.contains("sentiment")) {
      r.description_sentiment = polarity_from_string(
          doc.at("sentiment").get<std::string>(),
          path.string() + ":" + std::to_string(lineno) + ": ");
    }
    if (doc.contains("duration")) r.duration = doc.at("duration").get<double>();
    out.push_back(std::move(r));
  });
  return out;
}

inline nlohmann::json description_record_to_json(const DescriptionRecord& r) {
  nlohmann::json doc;
  doc["sample_id"] = r.sample_id;
  if (!r.description.empty()) doc["description"] = r.description;
  doc["token_count"] = r.token_count;
  if (r.av_match.has_value()) doc["av_match"] = *r.av_match;
  if (r.description_labels.has_value()) doc["labels"] = *r.description_labels;
  if (r.description_sentiment.has_value()) doc["sentiment"] = to_string(*r.description_sentiment);
  if (r.duration.has_value()) doc["duration"] = *r.duration;
  return doc;
}

inline void write_description_records(const std::filesystem::path& path,
                                      const std::vector<DescriptionRecord>& records) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  for (const auto& r : records) out << description_record_to_json(r).dump() << "\n";
}

// {"sample_id", "classifier_id", "emotion", "sentiment"}; one vote per
// (sample, classifier) pair.
inline std::map<std::string, std::vector<ClassifierVote>> load_votes(
    const std::filesystem::path& path) {
  std::map<std::string, std::vector<ClassifierVote>> out;
  detail::for_each_jsonl(path, [&](const nlohmann::json& doc, std::size_t lineno) {
    ClassifierVote v;
    v.sample_id = detail::require_sample_id(doc, path, lineno);
    v.classifier_id = doc.at("classifier_id").get<std::string>();
    v.emotion = normalize_label(doc.at("emotion").get<std::string>());
    v.sentiment = polarity_from_string(doc.at("sentiment").get<std::string>(),
                                       path.string() + ":" + std::to_string(lineno) + ": ");
    for (const auto& existing : out[v.sample_id]) {
      if (existing.classifier_id == v.classifier_id) {
        throw InvariantViolation(path.string() + ":" + std::to_string(lineno) +
                                     ": duplicate vote from classifier \"" + v.classifier_id +
                                     "\" for sample \"" + v.sample_id + "\"",
                                 v.classifier_id);
      }
    }
    out[v.sample_id].push_back(std::move(v));
  });
  return out;
}

// Extraction output: {"sample_id", "labels", "sentiment"?}.
inline void write_extractions(const std::filesystem::path& path,
                              const std::vector<std::pair<std::string, LabelSet>>& labels,
                              const std::map<std::string, SentimentPolarity>* sentiments = nullptr) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  for (const auto& [id, set] : labels) {
    nlohmann::json doc;
    doc["sample_id"] = id;
    doc["labels"] = set;
    if (sentiments != nullptr) {
      if (auto it = sentiments->find(id); it != sentiments->end()) {
        doc["sentiment"] = to_string(it->second);
      }
    }
    out << doc.dump() << "\n";
  }
}

}  // namespace emeval
