#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "emeval/errors.hpp"
#include "emeval/label.hpp"
#include "emeval/lexicon.hpp"
#include "emeval/taxonomy.hpp"

namespace emeval {

// One candidate dataset sample going through the filtering pipeline.
struct DescriptionRecord {
  std::string sample_id;
  std::string description;
  std::size_t token_count = 0;  // whitespace tokens of description
  std::optional<bool> av_match;  // absent = unknown
  std::optional<LabelSet> description_labels;
  std::optional<SentimentPolarity> description_sentiment;
  std::optional<double> duration;  // seconds, only used by dataset_stats
};

inline std::size_t count_tokens(const std::string& text) {
  std::size_t n = 0;
  bool in_token = false;
  for (unsigned char c : text) {
    if (std::isspace(c) != 0) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++n;
    }
  }
  return n;
}

enum class RemovalReason { length_tail, av_mismatch, vote_tie, label_inconsistent };

inline std::string to_string(RemovalReason r) {
  switch (r) {
    case RemovalReason::length_tail: return "length_tail";
    case RemovalReason::av_mismatch: return "av_mismatch";
    case RemovalReason::vote_tie: return "vote_tie";
    case RemovalReason::label_inconsistent: return "label_inconsistent";
  }
  return "length_tail";
}

// kept + removed partition the filter's input.
struct FilterReport {
  std::set<std::string> kept;
  std::map<std::string, RemovalReason> removed;
  std::map<std::string, double> thresholds;
  std::size_t av_unknown = 0;
};

// Nearest-rank empirical percentile: the value at rank ceil(p/100 * N) of the
// sorted data (rank clamped to [1, N]).
inline std::size_t percentile_nearest_rank(std::vector<std::size_t> sorted_values, double pct) {
  const std::size_t n = sorted_values.size();
  auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted_values[rank - 1];
}

// Removes records whose token count falls strictly outside the empirical
// [low_pct, high_pct] percentile values; boundary-equal records stay.
inline FilterReport length_filter(const std::vector<DescriptionRecord>& records, double low_pct,
                                  double high_pct) {
  if (records.empty()) throw EmptyInput("length_filter: no records");
  if (!(low_pct >= 0.0 && low_pct < high_pct && high_pct <= 100.0)) {
    throw OutOfRange("length_filter: need 0 <= low < high <= 100");
  }
  std::vector<std::size_t> counts;
  counts.reserve(records.size());
  for (const auto& r : records) counts.push_back(r.token_count);
  std::sort(counts.begin(), counts.end());
  const std::size_t low_value = percentile_nearest_rank(counts, low_pct);
  const std::size_t high_value = percentile_nearest_rank(counts, high_pct);

  FilterReport report;
  report.thresholds["low_pct"] = low_pct;
  report.thresholds["high_pct"] = high_pct;
  report.thresholds["low_token_count"] = static_cast<double>(low_value);
  report.thresholds["high_token_count"] = static_cast<double>(high_value);
  for (const auto& r : records) {
    if (r.token_count < low_value || r.token_count > high_value) {
      report.removed.emplace(r.sample_id, RemovalReason::length_tail);
    } else {
      report.kept.insert(r.sample_id);
    }
  }
  return report;
}

// Removes records whose audio-video match flag is false; records without a
// flag are kept and counted as unknown.
inline FilterReport av_match_filter(const std::vector<DescriptionRecord>& records) {
  FilterReport report;
  for (const auto& r : records) {
    if (r.av_match.has_value() && !*r.av_match) {
      report.removed.emplace(r.sample_id, RemovalReason::av_mismatch);
    } else {
      if (!r.av_match.has_value()) ++report.av_unknown;
      report.kept.insert(r.sample_id);
    }
  }
  return report;
}

// One classifier's prediction for one sample.
struct ClassifierVote {
  std::string sample_id;
  std::string classifier_id;
  EmotionLabel emotion;
  SentimentPolarity sentiment = SentimentPolarity::neutral;
};

// A field is unresolved (nullopt) when the top vote count is tied.
struct VoteOutcome {
  std::optional<EmotionLabel> emotion;
  std::optional<SentimentPolarity> sentiment;
};

inline VoteOutcome majority_vote(const std::vector<ClassifierVote>& votes) {
  if (votes.empty()) throw NoVotes("majority_vote: no votes");
  std::map<EmotionLabel, std::size_t> emotion_counts;
  std::map<SentimentPolarity, std::size_t> sentiment_counts;
  for (const auto& v : votes) {
    emotion_counts[v.emotion] += 1;
    sentiment_counts[v.sentiment] += 1;
  }
  VoteOutcome out;
  auto winner = [](const auto& counts) -> std::optional<typename std::decay_t<
                     decltype(counts)>::key_type> {
    std::size_t best = 0;
    int ties = 0;
    typename std::decay_t<decltype(counts)>::key_type arg{};
    for (const auto& [key, count] : counts) {
      if (count > best) {
        best = count;
        arg = key;
        ties = 1;
      } else if (count == best) {
        ++ties;
      }
    }
    if (ties != 1) return std::nullopt;
    return arg;
  };
  out.emotion = winner(emotion_counts);
  out.sentiment = winner(sentiment_counts);
  return out;
}

enum class ConsistencyMode { emotion, sentiment, both };

struct ConsistencyDecision {
  bool keep = true;
  std::optional<RemovalReason> reason;
};

// Keeps a record when the crowd signal is consistent with the description's
// own labels. The emotion check compares after grouping (description labels
// are fine-grained, crowd labels basic) and passes if the grouped crowd label
// lands in the grouped description set under at least one wheel. Unresolved
// crowd fields fail their check.
inline ConsistencyDecision consistency_filter(const DescriptionRecord& rec,
                                              const std::optional<EmotionLabel>& crowd_emotion,
                                              const std::optional<SentimentPolarity>& crowd_sentiment,
                                              const GroupingPipeline& p, ConsistencyMode mode) {
  auto check_emotion = [&]() -> ConsistencyDecision {
    if (!rec.description_labels.has_value()) {
      throw MissingField("consistency_filter: record " + rec.sample_id +
                         " has no description_labels");
    }
    if (!crowd_emotion.has_value()) return {false, RemovalReason::vote_tie};
    for (std::size_t k = 0; k < p.wheel_count(); ++k) {
      const auto grouped = p.group(*rec.description_labels, k);
      if (grouped.count(p.group_label(*crowd_emotion, k)) != 0) return {true, std::nullopt};
    }
    return {false, RemovalReason::label_inconsistent};
  };
  auto check_sentiment = [&]() -> ConsistencyDecision {
    if (!rec.description_sentiment.has_value()) {
      throw MissingField("consistency_filter: record " + rec.sample_id +
                         " has no description_sentiment");
    }
    if (!crowd_sentiment.has_value()) return {false, RemovalReason::vote_tie};
    if (*rec.description_sentiment == *crowd_sentiment) return {true, std::nullopt};
    return {false, RemovalReason::label_inconsistent};
  };

  if (mode == ConsistencyMode::emotion) return check_emotion();
  if (mode == ConsistencyMode::sentiment) return check_sentiment();
  auto e = check_emotion();
  if (!e.keep) return e;
  return check_sentiment();
}

// Histogram over fixed-width bins [i*w, (i+1)*w).
struct Histogram {
  double bin_width = 1.0;
  std::map<std::size_t, std::size_t> bins;  // bin index -> count

  void add(double value) {
    bins[static_cast<std::size_t>(std::floor(value / bin_width))] += 1;
  }
};

struct DatasetStats {
  Histogram token_hist;
  std::map<std::size_t, std::size_t> labels_per_sample;
  std::optional<Histogram> duration_hist;
};

// Length and labels-per-sample histograms, plus a duration histogram when any
// record carries a duration. Records without labels are skipped by the
// labels-per-sample count.
inline DatasetStats dataset_stats(const std::vector<DescriptionRecord>& records,
                                  double token_bin_width = 5.0,
                                  double duration_bin_width = 1.0) {
  DatasetStats stats;
  stats.token_hist.bin_width = token_bin_width;
  bool any_duration = false;
  Histogram durations;
  durations.bin_width = duration_bin_width;
  for (const auto& r : records) {
    stats.token_hist.add(static_cast<double>(r.token_count));
    if (r.description_labels.has_value()) {
      stats.labels_per_sample[r.description_labels->size()] += 1;
    }
    if (r.duration.has_value()) {
      any_duration = true;
      durations.add(*r.duration);
    }
  }
  if (any_duration) stats.duration_hist = std::move(durations);
  return stats;
}

}  // namespace emeval
