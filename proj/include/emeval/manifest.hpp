#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "emeval/errors.hpp"
#include "emeval/label.hpp"
#include "emeval/metrics.hpp"
#include "emeval/taxonomy_io.hpp"

namespace emeval {

// Describes one benchmark dataset: which task it belongs to, how many
// samples to expect, and where its ground truth lives. Basic datasets carry
// their label taxonomy; sentiment datasets carry their score range.
struct DatasetManifest {
  std::string name;
  Task task = Task::fine_grained;
  std::string split;
  std::size_t expected_count = 0;
  std::optional<LabelSet> taxonomy;
  std::optional<ScoreRange> score_range;
  std::filesystem::path ground_truth_path;  // resolved against the manifest's directory

  void validate() const {
    if (name.empty()) throw InvariantViolation("manifest: name must be non-empty");
    if (expected_count == 0) throw InvariantViolation("manifest " + name + ": expected_count must be > 0");
    if (task == Task::basic && (!taxonomy.has_value() || taxonomy->empty())) {
      throw InvariantViolation("manifest " + name + ": basic task needs a taxonomy");
    }
    if (task == Task::sentiment) {
      if (!score_range.has_value()) {
        throw InvariantViolation("manifest " + name + ": sentiment task needs a score_range");
      }
      if (!(score_range->lo < score_range->hi)) {
        throw InvariantViolation("manifest " + name + ": score_range must satisfy lo < hi");
      }
    }
  }
};

inline Task task_from_string(const std::string& s, const std::string& origin) {
  if (s == "fine_grained") return Task::fine_grained;
  if (s == "basic") return Task::basic;
  if (s == "sentiment") return Task::sentiment;
  throw ParseError(origin + ": unknown task \"" + s + "\"");
}

inline DatasetManifest manifest_from_json(const nlohmann::json& doc, const std::string& origin,
                                          const std::filesystem::path& base_dir) {
  DatasetManifest m;
  try {
    m.name = doc.at("name").get<std::string>();
    m.task = task_from_string(doc.at("task").get<std::string>(), origin);
    m.split = doc.value("split", std::string());
    m.expected_count = doc.at("expected_count").get<std::size_t>();
    if (doc.contains("taxonomy")) {
      LabelSet t;
      for (const auto& l : doc.at("taxonomy")) t.insert(normalize_label(l.get<std::string>()));
      m.taxonomy = std::move(t);
    }
    if (doc.contains("score_range")) {
      const auto& r = doc.at("score_range");
      if (!r.is_array() || r.size() != 2) {
        throw ParseError(origin + ": score_range must be [lo, hi]");
      }
      m.score_range = ScoreRange{r[0].get<double>(), r[1].get<double>()};
    }
    std::filesystem::path gt = doc.at("ground_truth_path").get<std::string>();
    m.ground_truth_path = gt.is_absolute() ? gt : base_dir / gt;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(origin + ": " + e.what());
  } catch (const EmptyLabelError& e) {
    throw ParseError(origin + ": " + e.what());
  }
  m.validate();
  return m;
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  return manifest_from_json(detail::parse_json_file(path), path.string(),
                            path.parent_path());
}

}  // namespace emeval
