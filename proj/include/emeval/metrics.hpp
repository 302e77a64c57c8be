#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emeval/errors.hpp"
#include "emeval/label.hpp"
#include "emeval/lexicon.hpp"
#include "emeval/parallel.hpp"
#include "emeval/taxonomy.hpp"

namespace emeval {

enum class Task { fine_grained, basic, sentiment };

inline std::string to_string(Task t) {
  switch (t) {
    case Task::fine_grained: return "fine_grained";
    case Task::basic: return "basic";
    case Task::sentiment: return "sentiment";
  }
  return "fine_grained";
}

// Fine-grained: a non-empty truth set against a free-form prediction set.
struct FineGrainedInstance {
  std::string sample_id;
  LabelSet truth;
  LabelSet prediction;
};

// Basic: one taxonomy label against a free-form prediction set.
struct BasicInstance {
  std::string sample_id;
  EmotionLabel truth;
  LabelSet prediction;
};

// Sentiment: a real-valued score against a predicted polarity.
struct SentimentInstance {
  std::string sample_id;
  double score = 0.0;
  SentimentPolarity predicted = SentimentPolarity::neutral;
};

struct ScoreRange {
  double lo = -3.0;
  double hi = 3.0;
};

// Scores for one task on one dataset. `primary` is the task's headline
// metric (F_s, HIT, or WAF) in [0, 1]; tables render it x100.
struct MetricReport {
  Task task = Task::fine_grained;
  std::map<std::string, std::map<std::string, double>> per_wheel;
  double primary = 0.0;
  std::map<std::string, double> secondary;
};

// What to do with samples whose grouped prediction set is empty: score their
// precision as 0 (default; abstaining costs accuracy) or leave them out of
// the precision average.
enum class EmptyPredictionPolicy { score_zero, skip };

struct SetMetricOptions {
  EmptyPredictionPolicy empty_prediction = EmptyPredictionPolicy::score_zero;
  unsigned workers = 1;
};

// Set-level precision/recall/F over grouped label sets. Per wheel: per-sample
// precision |G(Y) ∩ G(P)| / |G(P)| and recall |G(Y) ∩ G(P)| / |G(Y)| are
// averaged over samples first, then combined into the harmonic mean; the
// report's headline numbers average the per-wheel values.
inline MetricReport set_metrics(const std::vector<FineGrainedInstance>& instances,
                                const GroupingPipeline& p,
                                const SetMetricOptions& opts = {}) {
  if (instances.empty()) throw EmptyEvaluation("set_metrics: no instances");
  const std::size_t k_wheels = p.wheel_count();
  const std::size_t n = instances.size();

  struct Row {
    double precision = 0.0;
    double recall = 0.0;
    bool empty_prediction = false;
  };

  MetricReport report;
  report.task = Task::fine_grained;
  long double f_acc = 0.0L, p_acc = 0.0L, r_acc = 0.0L;
  for (std::size_t k = 0; k < k_wheels; ++k) {
    std::vector<Row> rows(n);
    parallel_for(n, opts.workers, [&](std::size_t i) {
      const auto truth = p.group(instances[i].truth, k);
      const auto pred = p.group(instances[i].prediction, k);
      std::size_t inter = 0;
      for (const auto& label : truth) inter += pred.count(label);
      Row& row = rows[i];
      row.empty_prediction = pred.empty();
      row.precision = pred.empty() ? 0.0 : static_cast<double>(inter) / pred.size();
      row.recall = truth.empty() ? 0.0 : static_cast<double>(inter) / truth.size();
    });
    long double psum = 0.0L, rsum = 0.0L;
    std::size_t p_count = 0;
    for (const Row& row : rows) {
      if (!(row.empty_prediction && opts.empty_prediction == EmptyPredictionPolicy::skip)) {
        psum += row.precision;
        ++p_count;
      }
      rsum += row.recall;
    }
    const double precision = p_count == 0 ? 0.0 : static_cast<double>(psum / p_count);
    const double recall = static_cast<double>(rsum / n);
    const double f =
        precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    auto& wheel = report.per_wheel[p.wheels[k].name()];
    wheel["precision_s"] = precision;
    wheel["recall_s"] = recall;
    wheel["f_s"] = f;
    f_acc += f;
    p_acc += precision;
    r_acc += recall;
  }
  report.primary = static_cast<double>(f_acc / k_wheels);
  report.secondary["precision_s"] = static_cast<double>(p_acc / k_wheels);
  report.secondary["recall_s"] = static_cast<double>(r_acc / k_wheels);
  return report;
}

// Hit rate: per wheel, the fraction of samples whose grouped truth label is a
// member of the grouped prediction set; the headline value averages wheels.
inline MetricReport hit_rate(const std::vector<BasicInstance>& instances,
                             const GroupingPipeline& p, unsigned workers = 1) {
  if (instances.empty()) throw EmptyEvaluation("hit_rate: no instances");
  const std::size_t k_wheels = p.wheel_count();
  const std::size_t n = instances.size();

  MetricReport report;
  report.task = Task::basic;
  long double hit_acc = 0.0L;
  for (std::size_t k = 0; k < k_wheels; ++k) {
    std::vector<unsigned char> hits(n, 0);
    parallel_for(n, workers, [&](std::size_t i) {
      const auto truth = p.group_label(instances[i].truth, k);
      const auto pred = p.group(instances[i].prediction, k);
      hits[i] = pred.count(truth) != 0 ? 1 : 0;
    });
    long double sum = 0.0L;
    for (unsigned char h : hits) sum += h;
    const double hit = static_cast<double>(sum / n);
    report.per_wheel[p.wheels[k].name()]["hit"] = hit;
    hit_acc += hit;
  }
  report.primary = static_cast<double>(hit_acc / k_wheels);
  return report;
}

// Maps a score to a polarity by sign; zero is excluded from binary scoring.
inline std::optional<SentimentPolarity> sentiment_binarize(double score,
                                                           const ScoreRange& range = {}) {
  if (score < range.lo || score > range.hi) {
    throw OutOfRange("score " + std::to_string(score) + " outside [" +
                     std::to_string(range.lo) + ", " + std::to_string(range.hi) + "]");
  }
  if (score < 0.0) return SentimentPolarity::negative;
  if (score > 0.0) return SentimentPolarity::positive;
  return std::nullopt;
}

// Binary ACC and weighted average F over {positive, negative}. Neutral
// predictions never match a binarized truth, so they count against both
// accuracy and the true class's recall. Zero-score samples are excluded and
// their count reported.
inline MetricReport acc_waf(const std::vector<SentimentInstance>& instances,
                            const ScoreRange& range = {}, unsigned workers = 1) {
  if (instances.empty()) throw EmptyEvaluation("acc_waf: no instances");
  const std::size_t n = instances.size();
  // 0 = negative truth, 1 = positive truth, columns: predicted neg/pos/neutral.
  struct Cell {
    signed char truth = -1;  // -1 excluded
    signed char pred = 0;
  };
  std::vector<Cell> cells(n);
  parallel_for(n, workers, [&](std::size_t i) {
    auto t = sentiment_binarize(instances[i].score, range);
    Cell& c = cells[i];
    if (!t.has_value()) return;
    c.truth = *t == SentimentPolarity::positive ? 1 : 0;
    switch (instances[i].predicted) {
      case SentimentPolarity::negative: c.pred = 0; break;
      case SentimentPolarity::positive: c.pred = 1; break;
      case SentimentPolarity::neutral: c.pred = 2; break;
    }
  });

  std::size_t confusion[2][3] = {{0, 0, 0}, {0, 0, 0}};
  std::size_t excluded = 0;
  for (const Cell& c : cells) {
    if (c.truth < 0) {
      ++excluded;
    } else {
      confusion[c.truth][static_cast<int>(c.pred)] += 1;
    }
  }
  const std::size_t total = n - excluded;
  if (total == 0) throw EmptyEvaluation("acc_waf: every instance has score 0");

  const std::size_t correct = confusion[0][0] + confusion[1][1];
  const double acc = static_cast<double>(correct) / total;

  double waf = 0.0;
  for (int cls = 0; cls < 2; ++cls) {
    const std::size_t tp = confusion[cls][cls];
    const std::size_t fn = confusion[cls][1 - cls] + confusion[cls][2];
    const std::size_t fp = confusion[1 - cls][cls];
    const std::size_t support = tp + fn;
    const double f1 =
        (2 * tp + fp + fn) == 0 ? 0.0 : 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
    waf += (static_cast<double>(support) / total) * f1;
  }

  MetricReport report;
  report.task = Task::sentiment;
  report.primary = waf;
  report.secondary["acc"] = acc;
  report.secondary["excluded"] = static_cast<double>(excluded);
  report.secondary["scored"] = static_cast<double>(total);
  return report;
}

// Unweighted mean of the primary metric across the expected datasets.
inline double dataset_mean(const std::map<std::string, MetricReport>& reports,
                           const std::vector<std::string>& expected) {
  if (expected.empty()) throw EmptyEvaluation("dataset_mean: no datasets configured");
  long double sum = 0.0L;
  for (const auto& name : expected) {
    auto it = reports.find(name);
    if (it == reports.end()) throw MissingDataset(name);
    sum += it->second.primary;
  }
  return static_cast<double>(sum / expected.size());
}

}  // namespace emeval
