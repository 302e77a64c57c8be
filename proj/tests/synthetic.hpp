#pragma once

// Deterministic synthetic benchmark: nine mock datasets with the real
// benchmark's names and sample counts, plus matching prediction files and a
// run configuration. Everything derives from one fixed seed, so repeated
// generation is byte-identical.

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

namespace synthetic {

struct DatasetSpec {
  std::string name;
  std::string task;  // basic | sentiment | fine_grained
  std::string split;
  std::size_t count;
  std::vector<std::string> taxonomy;  // basic only
  double lo = 0, hi = 0;              // sentiment only
};

inline const std::vector<DatasetSpec>& benchmark_datasets() {
  static const std::vector<DatasetSpec> specs = {
      {"MER2023", "basic", "MER-MULTI", 411,
       {"worry", "happy", "neutral", "angry", "surprised", "sad"}},
      {"MER2024", "basic", "MER-SEMI", 1169,
       {"worry", "happy", "neutral", "angry", "surprised", "sad"}},
      {"MELD", "basic", "Test", 2610,
       {"anger", "joy", "sadness", "neutral", "disgust", "fear", "surprise"}},
      {"IEMOCAP", "basic", "Session5", 1241, {"anger", "happiness", "sadness", "neutral"}},
      {"MOSI", "sentiment", "Test", 686, {}, -3, 3},
      {"MOSEI", "sentiment", "Test", 4659, {}, -3, 3},
      {"SIMS", "sentiment", "Test", 457, {}, -1, 1},
      {"SIMS v2", "sentiment", "Test", 1034, {}, -1, 1},
      {"OV-MERD+", "fine_grained", "All", 532, {}},
  };
  return specs;
}

inline std::string sanitize(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    if (std::isalnum(static_cast<unsigned char>(c)) == 0 && c != '.' && c != '_' && c != '-') {
      c = '_';
    }
  }
  return out;
}

// Writes manifests/, truth/, preds/, and run.json under root. data_dir must
// hold the bundled lemma/synonyms/lexicon/wheel files.
inline void generate_benchmark(const std::filesystem::path& root,
                               const std::filesystem::path& data_dir,
                               std::uint64_t seed = 20240811) {
  namespace fs = std::filesystem;
  fs::create_directories(root / "manifests");
  fs::create_directories(root / "truth");
  fs::create_directories(root / "preds");

  const std::vector<std::string> fine_vocab = {
      "happy",   "joyful",  "delight",  "sad",     "grief",   "sorrow",  "angry",
      "rage",    "fear",    "terror",   "nervous", "anxious", "calm",    "surprise",
      "curious", "bored",   "confused", "proud",   "ashamed", "lonely",  "hopeful"};

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  nlohmann::json run;
  run["wheels"] = nlohmann::json::array({(data_dir / "wheels" / "plutchik.json").string()});
  run["lemma"] = (data_dir / "lemma.json").string();
  run["synonyms"] = (data_dir / "synonyms.json").string();
  run["lexicon"] = (data_dir / "lexicon.tsv").string();
  run["predictions_dir"] = "preds";
  run["extraction_mode"] = "file";
  auto& manifest_list = run["manifests"] = nlohmann::json::array();

  for (const auto& spec : benchmark_datasets()) {
    const std::string file_stem = sanitize(spec.name);

    nlohmann::json manifest;
    manifest["name"] = spec.name;
    manifest["task"] = spec.task;
    manifest["split"] = spec.split;
    manifest["expected_count"] = spec.count;
    if (!spec.taxonomy.empty()) manifest["taxonomy"] = spec.taxonomy;
    if (spec.task == "sentiment") {
      manifest["score_range"] = nlohmann::json::array({spec.lo, spec.hi});
    }
    manifest["ground_truth_path"] = "../truth/" + file_stem + ".jsonl";
    {
      std::ofstream out(root / "manifests" / (file_stem + ".json"));
      out << manifest.dump(2) << "\n";
    }
    manifest_list.push_back("manifests/" + file_stem + ".json");

    std::ofstream truth(root / "truth" / (file_stem + ".jsonl"));
    std::ofstream preds(root / "preds" / (file_stem + ".jsonl"));
    for (std::size_t i = 0; i < spec.count; ++i) {
      const std::string id = file_stem + "_" + std::to_string(i);
      nlohmann::json t, p;
      t["sample_id"] = id;
      p["sample_id"] = id;
      if (spec.task == "basic") {
        const auto& label = spec.taxonomy[rng() % spec.taxonomy.size()];
        t["label"] = label;
        std::vector<std::string> predicted;
        if (unit(rng) < 0.7) predicted.push_back(label);
        for (int extra = rng() % 3; extra > 0; --extra) {
          predicted.push_back(fine_vocab[rng() % fine_vocab.size()]);
        }
        p["labels"] = predicted;
      } else if (spec.task == "sentiment") {
        double score;
        if (unit(rng) < 0.02) {
          score = 0.0;
        } else {
          score = spec.lo + (spec.hi - spec.lo) * unit(rng);
        }
        t["score"] = score;
        const char* polarity;
        if (unit(rng) < 0.8) {
          polarity = score > 0 ? "positive" : (score < 0 ? "negative" : "neutral");
        } else {
          const char* all[3] = {"positive", "negative", "neutral"};
          polarity = all[rng() % 3];
        }
        p["sentiment"] = polarity;
      } else {
        std::vector<std::string> truth_labels;
        for (int n = 1 + rng() % 3; n > 0; --n) {
          truth_labels.push_back(fine_vocab[rng() % fine_vocab.size()]);
        }
        t["labels"] = truth_labels;
        std::vector<std::string> predicted;
        for (const auto& label : truth_labels) {
          if (unit(rng) < 0.6) predicted.push_back(label);
        }
        for (int extra = rng() % 3; extra > 0; --extra) {
          predicted.push_back(fine_vocab[rng() % fine_vocab.size()]);
        }
        p["labels"] = predicted;
      }
      truth << t.dump() << "\n";
      preds << p.dump() << "\n";
    }
  }

  std::ofstream cfg(root / "run.json");
  cfg << run.dump(2) << "\n";
}

}  // namespace synthetic
