#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "emeval/curation.hpp"
#include "emeval/errors.hpp"
#include "emeval/metrics.hpp"

namespace emeval {

// Benchmark column order: basic, sentiment, fine-grained, then Mean.
inline const std::vector<std::string>& canonical_dataset_order() {
  static const std::vector<std::string> order = {
      "MER2023", "MER2024", "MELD", "IEMOCAP", "MOSI",
      "MOSEI",   "SIMS",    "SIMS v2", "OV-MERD+"};
  return order;
}

// Sorts dataset names by the canonical order; unknown names follow,
// alphabetically.
inline std::vector<std::string> order_datasets(std::vector<std::string> names) {
  const auto& canon = canonical_dataset_order();
  auto rank = [&](const std::string& n) {
    auto it = std::find(canon.begin(), canon.end(), n);
    return it == canon.end() ? canon.size() : static_cast<std::size_t>(it - canon.begin());
  };
  std::sort(names.begin(), names.end(), [&](const std::string& a, const std::string& b) {
    const auto ra = rank(a), rb = rank(b);
    return ra != rb ? ra < rb : a < b;
  });
  return names;
}

// Unit-interval metrics are presented x100 with two decimals.
inline std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v * 100.0);
  return buf;
}

inline std::string format_value(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// One row of primaries in table order plus the dataset-wise mean.
inline std::string render_summary_csv(const std::vector<std::string>& ordered_names,
                                      const std::map<std::string, MetricReport>& reports,
                                      double mean) {
  std::string header, row;
  for (const auto& name : ordered_names) {
    auto it = reports.find(name);
    if (it == reports.end()) throw MissingDataset(name);
    header += name + ",";
    row += format_score(it->second.primary) + ",";
  }
  header += "Mean";
  row += format_score(mean);
  return header + "\n" + row + "\n";
}

inline std::string render_summary_markdown(const std::vector<std::string>& ordered_names,
                                           const std::map<std::string, MetricReport>& reports,
                                           double mean) {
  std::string header = "|", sep = "|", row = "|";
  for (const auto& name : ordered_names) {
    auto it = reports.find(name);
    if (it == reports.end()) throw MissingDataset(name);
    header += " " + name + " |";
    sep += " ---: |";
    row += " " + format_score(it->second.primary) + " |";
  }
  header += " Mean |";
  sep += " ---: |";
  row += " " + format_score(mean) + " |";
  return header + "\n" + sep + "\n" + row + "\n";
}

// Long-form detail rows: every per-wheel and secondary value.
inline std::string render_details_csv(const std::vector<std::string>& ordered_names,
                                      const std::map<std::string, MetricReport>& reports) {
  std::string out = "dataset,task,wheel,metric,value\n";
  for (const auto& name : ordered_names) {
    auto it = reports.find(name);
    if (it == reports.end()) throw MissingDataset(name);
    const auto& r = it->second;
    out += name + "," + to_string(r.task) + ",,primary," + format_value(r.primary) + "\n";
    for (const auto& [metric, value] : r.secondary) {
      out += name + "," + to_string(r.task) + ",," + metric + "," + format_value(value) + "\n";
    }
    for (const auto& [wheel, scores] : r.per_wheel) {
      for (const auto& [metric, value] : scores) {
        out += name + "," + to_string(r.task) + "," + wheel + "," + metric + "," +
               format_value(value) + "\n";
      }
    }
  }
  return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << content;
}

// Histogram CSV: one row per non-empty bin.
inline std::string render_histogram_csv(const Histogram& h) {
  std::string out = "bin_lo,bin_hi,count\n";
  for (const auto& [index, count] : h.bins) {
    out += format_value(static_cast<double>(index) * h.bin_width) + "," +
           format_value(static_cast<double>(index + 1) * h.bin_width) + "," +
           std::to_string(count) + "\n";
  }
  return out;
}

inline std::string render_labels_histogram_csv(const std::map<std::size_t, std::size_t>& bins) {
  std::string out = "labels_per_sample,count\n";
  for (const auto& [size, count] : bins) {
    out += std::to_string(size) + "," + std::to_string(count) + "\n";
  }
  return out;
}

inline std::string render_filter_report_csv(const std::vector<std::string>& input_order,
                                            const FilterReport& report) {
  std::string out;
  for (const auto& [key, value] : report.thresholds) {
    out += "# " + key + "=" + format_value(value) + "\n";
  }
  out += "sample_id,status,reason\n";
  for (const auto& id : input_order) {
    auto it = report.removed.find(id);
    if (it != report.removed.end()) {
      out += id + ",removed," + to_string(it->second) + "\n";
    } else {
      out += id + ",kept,\n";
    }
  }
  return out;
}

}  // namespace emeval
