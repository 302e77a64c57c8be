#pragma once

// Orchestration behind the CLI subcommands. Everything here is deterministic:
// datasets and samples are processed in sorted order, per-sample work may run
// on several workers, and all reductions happen in a fixed order afterwards.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "emeval/curation.hpp"
#include "emeval/errors.hpp"
#include "emeval/extraction.hpp"
#include "emeval/manifest.hpp"
#include "emeval/metrics.hpp"
#include "emeval/records.hpp"
#include "emeval/report.hpp"
#include "emeval/taxonomy_io.hpp"

namespace emeval {

enum class ExtractionSource { file, lexicon, llm };

inline ExtractionSource extraction_source_from_string(const std::string& s,
                                                      const std::string& origin) {
  if (s == "file") return ExtractionSource::file;
  if (s == "lexicon") return ExtractionSource::lexicon;
  if (s == "llm") return ExtractionSource::llm;
  throw ParseError(origin + ": unknown extraction mode \"" + s + "\"");
}

struct RunConfig {
  std::vector<std::filesystem::path> manifests;
  std::vector<std::filesystem::path> wheels;
  std::filesystem::path lemma;
  std::filesystem::path synonyms;
  std::filesystem::path lexicon;
  ExtractionSource extraction_mode = ExtractionSource::file;
  std::map<std::string, std::filesystem::path> predictions;  // dataset name -> file
  std::filesystem::path predictions_dir;                     // fallback: <name>.jsonl
  double filter_low_pct = 5.0;
  double filter_high_pct = 95.0;
  std::optional<ConsistencyMode> consistency = ConsistencyMode::both;
  std::filesystem::path records;  // curation input
  std::filesystem::path votes;    // classifier votes
  double token_bin_width = 5.0;
  double duration_bin_width = 1.0;
  std::filesystem::path output_dir = ".";
  unsigned workers = 1;
};

inline ConsistencyMode consistency_mode_from_string(const std::string& s,
                                                    const std::string& origin) {
  if (s == "emotion") return ConsistencyMode::emotion;
  if (s == "sentiment") return ConsistencyMode::sentiment;
  if (s == "both") return ConsistencyMode::both;
  throw ParseError(origin + ": unknown consistency mode \"" + s + "\"");
}

// Structured-text run configuration; all relative paths resolve against the
// config file's directory. CLI flags override these values afterwards.
inline RunConfig load_run_config(const std::filesystem::path& path) {
  const auto doc = detail::parse_json_file(path);
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) -> std::filesystem::path {
    std::filesystem::path fp = p;
    return fp.is_absolute() ? fp : base / fp;
  };
  RunConfig cfg;
  try {
    for (const auto& m : doc.value("manifests", nlohmann::json::array())) {
      cfg.manifests.push_back(resolve(m.get<std::string>()));
    }
    for (const auto& w : doc.value("wheels", nlohmann::json::array())) {
      cfg.wheels.push_back(resolve(w.get<std::string>()));
    }
    if (doc.contains("lemma")) cfg.lemma = resolve(doc.at("lemma").get<std::string>());
    if (doc.contains("synonyms")) cfg.synonyms = resolve(doc.at("synonyms").get<std::string>());
    if (doc.contains("lexicon")) cfg.lexicon = resolve(doc.at("lexicon").get<std::string>());
    if (doc.contains("extraction_mode")) {
      cfg.extraction_mode = extraction_source_from_string(
          doc.at("extraction_mode").get<std::string>(), path.string());
    }
    if (doc.contains("predictions")) {
      const nlohmann::json preds = doc.at("predictions");
      for (const auto& [name, p] : preds.items()) {
        cfg.predictions[name] = resolve(p.get<std::string>());
      }
    }
    if (doc.contains("predictions_dir")) {
      cfg.predictions_dir = resolve(doc.at("predictions_dir").get<std::string>());
    }
    cfg.filter_low_pct = doc.value("filter_low_pct", cfg.filter_low_pct);
    cfg.filter_high_pct = doc.value("filter_high_pct", cfg.filter_high_pct);
    if (doc.contains("consistency_mode")) {
      const auto s = doc.at("consistency_mode").get<std::string>();
      if (s == "off") {
        cfg.consistency.reset();
      } else {
        cfg.consistency = consistency_mode_from_string(s, path.string());
      }
    }
    if (doc.contains("records")) cfg.records = resolve(doc.at("records").get<std::string>());
    if (doc.contains("votes")) cfg.votes = resolve(doc.at("votes").get<std::string>());
    cfg.token_bin_width = doc.value("token_bin_width", cfg.token_bin_width);
    cfg.duration_bin_width = doc.value("duration_bin_width", cfg.duration_bin_width);
    if (doc.contains("output_dir")) {
      cfg.output_dir = resolve(doc.at("output_dir").get<std::string>());
    }
    cfg.workers = doc.value("workers", cfg.workers);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return cfg;
}

inline std::string sanitize_dataset_filename(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    if (std::isalnum(static_cast<unsigned char>(c)) == 0 && c != '.' && c != '_' && c != '-') {
      c = '_';
    }
  }
  return out;
}

inline std::filesystem::path prediction_path_for(const RunConfig& cfg, const std::string& name) {
  if (auto it = cfg.predictions.find(name); it != cfg.predictions.end()) return it->second;
  if (!cfg.predictions_dir.empty()) {
    return cfg.predictions_dir / (sanitize_dataset_filename(name) + ".jsonl");
  }
  throw ParseError("no prediction file configured for dataset \"" + name + "\"");
}

namespace detail {

// Resolve a prediction record into a label set; honours the extraction mode.
inline LabelSet prediction_labels(const PredictionRecord& rec, ExtractionSource mode,
                                  const Lexicon* lex, const std::string& dataset) {
  if (mode == ExtractionSource::file) {
    if (rec.labels.has_value()) return *rec.labels;
    throw ParseError("dataset " + dataset + ": prediction for \"" + rec.sample_id +
                     "\" has no labels (extraction mode is \"file\")");
  }
  if (mode == ExtractionSource::lexicon) {
    if (!rec.text.has_value()) {
      throw ParseError("dataset " + dataset + ": prediction for \"" + rec.sample_id +
                       "\" has no text to extract from");
    }
    return extract_labels_lexicon({rec.sample_id, *rec.text}, *lex);
  }
  throw ParseError("dataset " + dataset + ": llm extraction runs through the extract "
                   "subcommand; evaluate expects its output as a labels file");
}

}  // namespace detail

struct EvaluateResult {
  std::vector<std::string> ordered_names;
  std::map<std::string, MetricReport> reports;
  double mean = 0.0;
  std::size_t unmatched_predictions = 0;  // prediction ids with no truth
  std::size_t missing_predictions = 0;    // truth ids scored as empty
};

// Scores every configured dataset and writes report.csv / report.md /
// details.csv into the output directory.
inline EvaluateResult run_evaluate(const RunConfig& cfg, std::ostream& log = std::cerr) {
  if (cfg.manifests.empty()) throw ParseError("evaluate: no manifests configured");
  if (cfg.wheels.empty()) throw ParseError("evaluate: no wheels configured");
  GroupingPipeline pipeline = load_pipeline(cfg.lemma, cfg.synonyms, cfg.wheels);
  std::optional<Lexicon> lexicon;
  if (!cfg.lexicon.empty()) lexicon = load_lexicon(cfg.lexicon);
  if (cfg.extraction_mode == ExtractionSource::lexicon && !lexicon.has_value()) {
    throw ParseError("evaluate: lexicon extraction mode needs a lexicon file");
  }

  EvaluateResult result;
  std::vector<DatasetManifest> manifests;
  for (const auto& path : cfg.manifests) manifests.push_back(load_manifest(path));
  {
    std::vector<std::string> names;
    for (const auto& m : manifests) names.push_back(m.name);
    result.ordered_names = order_datasets(std::move(names));
  }

  for (const auto& manifest : manifests) {
    const auto pred_path = prediction_path_for(cfg, manifest.name);
    auto predictions = load_predictions(pred_path);
    std::map<std::string, const PredictionRecord*> by_id;
    for (const auto& p : predictions) by_id[p.sample_id] = &p;

    std::set<std::string> truth_ids;
    MetricReport report;
    if (manifest.task == Task::fine_grained) {
      auto truth = load_fine_grained_truth(manifest.ground_truth_path);
      if (truth.size() != manifest.expected_count) {
        log << "warning: " << manifest.name << " has " << truth.size()
            << " ground-truth records, manifest expects " << manifest.expected_count << "\n";
      }
      std::vector<FineGrainedInstance> instances;
      for (const auto& [id, labels] : truth) {
        truth_ids.insert(id);
        FineGrainedInstance inst{id, labels, {}};
        if (auto it = by_id.find(id); it != by_id.end()) {
          inst.prediction = detail::prediction_labels(
              *it->second, cfg.extraction_mode, lexicon ? &*lexicon : nullptr, manifest.name);
        } else {
          ++result.missing_predictions;
        }
        instances.push_back(std::move(inst));
      }
      SetMetricOptions opts;
      opts.workers = cfg.workers;
      report = set_metrics(instances, pipeline, opts);
    } else if (manifest.task == Task::basic) {
      auto truth = load_basic_truth(manifest.ground_truth_path, manifest.taxonomy);
      if (truth.size() != manifest.expected_count) {
        log << "warning: " << manifest.name << " has " << truth.size()
            << " ground-truth records, manifest expects " << manifest.expected_count << "\n";
      }
      std::vector<BasicInstance> instances;
      for (const auto& [id, label] : truth) {
        truth_ids.insert(id);
        BasicInstance inst{id, label, {}};
        if (auto it = by_id.find(id); it != by_id.end()) {
          inst.prediction = detail::prediction_labels(
              *it->second, cfg.extraction_mode, lexicon ? &*lexicon : nullptr, manifest.name);
        } else {
          ++result.missing_predictions;
        }
        instances.push_back(std::move(inst));
      }
      report = hit_rate(instances, pipeline, cfg.workers);
    } else {
      const ScoreRange range = *manifest.score_range;
      auto truth = load_sentiment_truth(manifest.ground_truth_path, range);
      if (truth.size() != manifest.expected_count) {
        log << "warning: " << manifest.name << " has " << truth.size()
            << " ground-truth records, manifest expects " << manifest.expected_count << "\n";
      }
      std::vector<SentimentInstance> instances;
      for (const auto& [id, score] : truth) {
        truth_ids.insert(id);
        SentimentInstance inst{id, score, SentimentPolarity::neutral};
        if (auto it = by_id.find(id); it != by_id.end()) {
          const PredictionRecord& rec = *it->second;
          if (rec.sentiment.has_value()) {
            inst.predicted = *rec.sentiment;
          } else {
            if (!lexicon.has_value()) {
              throw ParseError("dataset " + manifest.name +
                               ": sentiment from labels needs a lexicon file");
            }
            inst.predicted = classify_sentiment(
                detail::prediction_labels(rec, cfg.extraction_mode, &*lexicon, manifest.name),
                *lexicon);
          }
        } else {
          ++result.missing_predictions;
        }
        instances.push_back(std::move(inst));
      }
      report = acc_waf(instances, range, cfg.workers);
    }

    // Prediction ids with no matching truth are reported, never scored.
    std::size_t unmatched = 0;
    for (const auto& [id, rec] : by_id) {
      (void)rec;
      if (truth_ids.count(id) == 0) ++unmatched;
    }
    if (unmatched > 0) {
      log << "warning: " << manifest.name << " has " << unmatched
          << " prediction ids with no ground truth\n";
    }
    result.unmatched_predictions += unmatched;

    report.task = manifest.task;
    result.reports[manifest.name] = std::move(report);
  }

  result.mean = dataset_mean(result.reports, result.ordered_names);

  std::filesystem::create_directories(cfg.output_dir);
  write_text_file(cfg.output_dir / "report.csv",
                  render_summary_csv(result.ordered_names, result.reports, result.mean));
  write_text_file(cfg.output_dir / "report.md",
                  render_summary_markdown(result.ordered_names, result.reports, result.mean));
  write_text_file(cfg.output_dir / "details.csv",
                  render_details_csv(result.ordered_names, result.reports));
  return result;
}

struct FilterRunResult {
  FilterReport combined;
  std::size_t input_count = 0;
  std::size_t kept_count = 0;
};

// length -> av_match -> consistency, each stage on the previous stage's
// survivors; the length percentiles come from the full input.
inline FilterRunResult run_filter(const RunConfig& cfg, std::ostream& log = std::cerr) {
  if (cfg.records.empty()) throw ParseError("filter: no records file configured");
  auto records = load_description_records(cfg.records);
  std::vector<std::string> input_order;
  for (const auto& r : records) input_order.push_back(r.sample_id);

  FilterRunResult result;
  result.input_count = records.size();

  auto length_report = length_filter(records, cfg.filter_low_pct, cfg.filter_high_pct);
  result.combined.thresholds = length_report.thresholds;
  result.combined.removed = length_report.removed;

  std::vector<DescriptionRecord> survivors;
  for (auto& r : records) {
    if (length_report.kept.count(r.sample_id) != 0) survivors.push_back(std::move(r));
  }

  auto av_report = av_match_filter(survivors);
  result.combined.av_unknown = av_report.av_unknown;
  for (const auto& [id, reason] : av_report.removed) result.combined.removed.emplace(id, reason);
  {
    std::vector<DescriptionRecord> next;
    for (auto& r : survivors) {
      if (av_report.kept.count(r.sample_id) != 0) next.push_back(std::move(r));
    }
    survivors = std::move(next);
  }

  if (cfg.consistency.has_value()) {
    if (cfg.votes.empty()) throw ParseError("filter: consistency mode needs a votes file");
    if (cfg.wheels.empty() || cfg.lemma.empty() || cfg.synonyms.empty()) {
      throw ParseError("filter: consistency mode needs lemma, synonyms, and wheel files");
    }
    GroupingPipeline pipeline = load_pipeline(cfg.lemma, cfg.synonyms, cfg.wheels);
    auto votes = load_votes(cfg.votes);
    std::vector<DescriptionRecord> next;
    for (auto& r : survivors) {
      std::optional<EmotionLabel> crowd_emotion;
      std::optional<SentimentPolarity> crowd_sentiment;
      if (auto it = votes.find(r.sample_id); it != votes.end()) {
        auto outcome = majority_vote(it->second);
        crowd_emotion = outcome.emotion;
        crowd_sentiment = outcome.sentiment;
      }
      auto decision =
          consistency_filter(r, crowd_emotion, crowd_sentiment, pipeline, *cfg.consistency);
      if (decision.keep) {
        next.push_back(std::move(r));
      } else {
        result.combined.removed.emplace(r.sample_id, *decision.reason);
      }
    }
    survivors = std::move(next);
  }

  for (const auto& r : survivors) result.combined.kept.insert(r.sample_id);
  result.kept_count = survivors.size();

  std::filesystem::create_directories(cfg.output_dir);
  write_description_records(cfg.output_dir / "filtered.jsonl", survivors);
  write_text_file(cfg.output_dir / "filter_report.csv",
                  render_filter_report_csv(input_order, result.combined));
  log << "filter: kept " << result.kept_count << " of " << result.input_count << " records\n";
  return result;
}

// Emits the token-count, labels-per-sample, and (when present) duration
// histograms as CSV files.
inline DatasetStats run_stats(const RunConfig& cfg, std::ostream& log = std::cerr) {
  if (cfg.records.empty()) throw ParseError("stats: no records file configured");
  auto records = load_description_records(cfg.records);
  auto stats = dataset_stats(records, cfg.token_bin_width, cfg.duration_bin_width);

  std::filesystem::create_directories(cfg.output_dir);
  write_text_file(cfg.output_dir / "token_hist.csv", render_histogram_csv(stats.token_hist));
  write_text_file(cfg.output_dir / "labels_hist.csv",
                  render_labels_histogram_csv(stats.labels_per_sample));
  if (stats.duration_hist.has_value()) {
    write_text_file(cfg.output_dir / "duration_hist.csv",
                    render_histogram_csv(*stats.duration_hist));
  } else {
    log << "stats: no duration fields present, duration histogram omitted\n";
  }
  return stats;
}

}  // namespace emeval
