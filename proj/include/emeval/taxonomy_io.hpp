#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "emeval/errors.hpp"
#include "emeval/taxonomy.hpp"

namespace emeval {

namespace detail {

inline nlohmann::json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline nlohmann::json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(origin + ": " + e.what());
  }
}

}  // namespace detail

// Wheel document shape:
//   { "name": "plutchik",
//     "sectors": [ { "inner": "joy", "outer": ["serenity", "ecstasy"] }, ... ] }
// All labels are normalized on load; invariant violations name the label.
inline EmotionWheel wheel_from_json(const nlohmann::json& doc, const std::string& origin) {
  if (!doc.is_object() || !doc.contains("name") || !doc.contains("sectors")) {
    throw ParseError(origin + ": wheel document needs \"name\" and \"sectors\"");
  }
  std::vector<WheelSector> sectors;
  try {
    for (const auto& s : doc.at("sectors")) {
      WheelSector sector;
      sector.inner = normalize_label(s.at("inner").get<std::string>());
      const nlohmann::json outer = s.value("outer", nlohmann::json::array());
      for (const auto& o : outer) {
        sector.outer.insert(normalize_label(o.get<std::string>()));
      }
      sectors.push_back(std::move(sector));
    }
    return EmotionWheel(doc.at("name").get<std::string>(), std::move(sectors));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(origin + ": " + e.what());
  } catch (const EmptyLabelError& e) {
    throw ParseError(origin + ": " + e.what());
  }
}

inline EmotionWheel load_wheel(const std::filesystem::path& path) {
  return wheel_from_json(detail::parse_json_file(path), path.string());
}

inline EmotionWheel load_wheel_from_text(const std::string& text,
                                         const std::string& origin = "<inline>") {
  return wheel_from_json(detail::parse_json_text(text, origin), origin);
}

// Lemma document shape:
//   { "irregular": { "surprised": "surprise" },
//     "suffix_rules": [ ["iness", "y"], ["ness", ""] ] }
inline LemmaMap lemma_from_json(const nlohmann::json& doc, const std::string& origin) {
  LemmaMap m;
  try {
    const nlohmann::json irregular = doc.value("irregular", nlohmann::json::object());
    for (const auto& [from, to] : irregular.items()) {
      m.irregular[normalize_label(from)] = normalize_label(to.get<std::string>());
    }
    const nlohmann::json rules = doc.value("suffix_rules", nlohmann::json::array());
    for (const auto& rule : rules) {
      if (!rule.is_array() || rule.size() != 2) {
        throw ParseError(origin + ": suffix rule must be a [suffix, replacement] pair");
      }
      m.suffix_rules.emplace_back(rule[0].get<std::string>(), rule[1].get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(origin + ": " + e.what());
  }
  m.validate();
  return m;
}

inline LemmaMap load_lemma(const std::filesystem::path& path) {
  return lemma_from_json(detail::parse_json_file(path), path.string());
}

// Synonym document shape: { "joyful": "happy", "scared": "fear", ... }
inline SynonymMap synonyms_from_json(const nlohmann::json& doc, const std::string& origin) {
  SynonymMap m;
  try {
    for (const auto& [from, to] : doc.items()) {
      m.entries[normalize_label(from)] = normalize_label(to.get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(origin + ": " + e.what());
  }
  m.validate();
  return m;
}

inline SynonymMap load_synonyms(const std::filesystem::path& path) {
  return synonyms_from_json(detail::parse_json_file(path), path.string());
}

inline GroupingPipeline load_pipeline(const std::filesystem::path& lemma_path,
                                      const std::filesystem::path& synonyms_path,
                                      const std::vector<std::filesystem::path>& wheel_paths) {
  GroupingPipeline p;
  p.lemma = load_lemma(lemma_path);
  p.synonyms = load_synonyms(synonyms_path);
  for (const auto& wp : wheel_paths) p.wheels.push_back(load_wheel(wp));
  p.validate();
  return p;
}

}  // namespace emeval
