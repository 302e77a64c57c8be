// emeval: scoring, extraction, curation, statistics, and kernel checks for
// descriptive emotion-recognition benchmarks.

#include <atomic>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "emeval/gradcheck.hpp"
#include "emeval/llm_client.hpp"
#include "emeval/parallel.hpp"
#include "emeval/records.hpp"
#include "emeval/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct CommonEvalFlags {
  std::string config_path;
  std::vector<std::string> manifests;
  std::vector<std::string> wheels;
  std::string lemma, synonyms, lexicon;
  std::string mode;
  std::vector<std::string> prediction_pairs;  // NAME=PATH
  std::string predictions_dir;
  std::string output_dir;
  unsigned workers = 0;
};

emeval::RunConfig build_config(const CommonEvalFlags& flags) {
  emeval::RunConfig cfg;
  if (!flags.config_path.empty()) cfg = emeval::load_run_config(flags.config_path);
  if (!flags.manifests.empty()) {
    cfg.manifests.clear();
    for (const auto& m : flags.manifests) cfg.manifests.emplace_back(m);
  }
  if (!flags.wheels.empty()) {
    cfg.wheels.clear();
    for (const auto& w : flags.wheels) cfg.wheels.emplace_back(w);
  }
  if (!flags.lemma.empty()) cfg.lemma = flags.lemma;
  if (!flags.synonyms.empty()) cfg.synonyms = flags.synonyms;
  if (!flags.lexicon.empty()) cfg.lexicon = flags.lexicon;
  if (!flags.mode.empty()) {
    cfg.extraction_mode = emeval::extraction_source_from_string(flags.mode, "--mode");
  }
  for (const auto& pair : flags.prediction_pairs) {
    auto eq = pair.find('=');
    if (eq == std::string::npos) {
      throw CLI::ValidationError("--prediction expects NAME=PATH, got \"" + pair + "\"");
    }
    cfg.predictions[pair.substr(0, eq)] = pair.substr(eq + 1);
  }
  if (!flags.predictions_dir.empty()) cfg.predictions_dir = flags.predictions_dir;
  if (!flags.output_dir.empty()) cfg.output_dir = flags.output_dir;
  if (flags.workers > 0) cfg.workers = flags.workers;
  return cfg;
}

int cmd_evaluate(const CommonEvalFlags& flags) {
  auto cfg = build_config(flags);
  auto result = emeval::run_evaluate(cfg, std::cerr);
  std::cout << emeval::render_summary_csv(result.ordered_names, result.reports, result.mean);
  std::cerr << "reports written to " << cfg.output_dir.string() << "\n";
  return kExitOk;
}

struct FilterFlags {
  CommonEvalFlags common;
  std::string records, votes;
  double low = 5.0, high = 95.0;
  std::string consistency = "both";
};

int cmd_filter(const FilterFlags& flags) {
  auto cfg = build_config(flags.common);
  if (!flags.records.empty()) cfg.records = flags.records;
  if (!flags.votes.empty()) cfg.votes = flags.votes;
  cfg.filter_low_pct = flags.low;
  cfg.filter_high_pct = flags.high;
  if (flags.consistency == "off") {
    cfg.consistency.reset();
  } else {
    cfg.consistency = emeval::consistency_mode_from_string(flags.consistency, "--consistency");
  }
  auto result = emeval::run_filter(cfg, std::cerr);
  std::cout << "kept " << result.kept_count << " of " << result.input_count << " records\n";
  return kExitOk;
}

struct StatsFlags {
  CommonEvalFlags common;
  std::string records;
  double token_bin = 5.0;
  double duration_bin = 1.0;
};

int cmd_stats(const StatsFlags& flags) {
  auto cfg = build_config(flags.common);
  if (!flags.records.empty()) cfg.records = flags.records;
  cfg.token_bin_width = flags.token_bin;
  cfg.duration_bin_width = flags.duration_bin;
  emeval::run_stats(cfg, std::cerr);
  std::cerr << "histograms written to " << cfg.output_dir.string() << "\n";
  return kExitOk;
}

struct ExtractFlags {
  std::string input;
  std::string output;
  std::string lexicon;
  std::string mode = "lexicon";
  bool with_sentiment = false;
  bool fallback_lexicon = false;
  unsigned workers = 1;
  double timeout_s = 30.0;
  unsigned retries = 2;
  unsigned concurrency = 4;
};

int cmd_extract(const ExtractFlags& flags) {
  auto responses = emeval::load_raw_responses(flags.input);
  std::optional<emeval::Lexicon> lexicon;
  if (!flags.lexicon.empty()) lexicon = emeval::load_lexicon(flags.lexicon);

  std::optional<emeval::LlmClient> client;
  if (flags.mode == "llm") {
    auto cfg = emeval::LlmClientConfig::from_env();
    cfg.timeout_s = flags.timeout_s;
    cfg.max_retries = flags.retries;
    cfg.max_concurrency = flags.concurrency;
    client.emplace(std::move(cfg));
  } else if (flags.mode == "lexicon") {
    if (!lexicon.has_value()) throw emeval::ParseError("extract: lexicon mode needs --lexicon");
  } else {
    throw CLI::ValidationError("--mode must be lexicon or llm");
  }
  if (flags.fallback_lexicon && !lexicon.has_value()) {
    throw emeval::ParseError("extract: --fallback-lexicon needs --lexicon");
  }

  std::vector<std::pair<std::string, emeval::LabelSet>> labels(responses.size());
  std::map<std::string, emeval::SentimentPolarity> sentiments;
  std::mutex sentiments_mu;
  std::atomic<std::size_t> fallbacks{0};

  emeval::parallel_for(responses.size(), flags.workers, [&](std::size_t i) {
    const auto& r = responses[i];
    emeval::LabelSet set;
    if (client.has_value()) {
      try {
        set = client->extract_labels(r);
      } catch (const emeval::MalformedReply&) {
        if (!flags.fallback_lexicon) throw;
        set = emeval::extract_labels_lexicon(r, *lexicon);
        ++fallbacks;
      }
    } else {
      set = emeval::extract_labels_lexicon(r, *lexicon);
    }
    labels[i] = {r.sample_id, set};
    if (flags.with_sentiment) {
      emeval::SentimentPolarity polarity;
      if (client.has_value()) {
        polarity = client->classify_sentiment(r.sample_id, set);
      } else {
        polarity = emeval::classify_sentiment(set, *lexicon);
      }
      std::lock_guard lock(sentiments_mu);
      sentiments[r.sample_id] = polarity;
    }
  });

  emeval::write_extractions(flags.output, labels,
                            flags.with_sentiment ? &sentiments : nullptr);
  if (fallbacks > 0) {
    std::cerr << "extract: lexicon fallback used for " << fallbacks.load() << " samples\n";
  }
  std::cerr << "extracted " << labels.size() << " samples to " << flags.output << "\n";
  return kExitOk;
}

struct FuseCheckFlags {
  std::string kernel = "all";
  unsigned seeds = 20;
  double eps = 1e-5;
  double threshold = 1e-4;
  std::size_t dim = 4;
  std::string mode = "softmax";
  std::size_t heads = 2;
  std::size_t queries = 2;
  std::size_t time_steps = 5;
  std::size_t length = 4;
  std::size_t vocab = 7;
};

int cmd_fuse_check(const FuseCheckFlags& flags) {
  namespace ef = emeval::fusion;
  std::vector<ef::Kernel> kernels;
  if (flags.kernel == "all") {
    kernels = {ef::Kernel::attention_fuse, ef::Kernel::qformer_fuse,
               ef::Kernel::autoregressive_nll};
  } else if (flags.kernel == "attention") {
    kernels = {ef::Kernel::attention_fuse};
  } else if (flags.kernel == "qformer") {
    kernels = {ef::Kernel::qformer_fuse};
  } else if (flags.kernel == "nll") {
    kernels = {ef::Kernel::autoregressive_nll};
  } else {
    throw CLI::ValidationError("--kernel must be all, attention, qformer, or nll");
  }

  std::printf("%-20s %6s %10s %14s %8s\n", "kernel", "seed", "eps", "max_rel_err", "status");
  bool all_pass = true;
  for (auto kernel : kernels) {
    double worst = 0.0;
    for (unsigned seed = 1; seed <= flags.seeds; ++seed) {
      ef::GradCheckSpec spec;
      spec.kernel = kernel;
      spec.seed = seed;
      spec.eps = flags.eps;
      spec.dim = flags.dim;
      spec.mode = flags.mode == "exact" ? ef::AttentionFusionParams::Mode::exact
                                        : ef::AttentionFusionParams::Mode::softmax;
      spec.heads = flags.heads;
      spec.query_tokens = flags.queries;
      spec.time_steps = flags.time_steps;
      spec.length = flags.length;
      spec.vocab = flags.vocab;
      auto result = ef::finite_diff_check(spec);
      worst = std::max(worst, result.max_rel_error);
      const bool pass = result.max_rel_error < flags.threshold;
      all_pass = all_pass && pass;
      std::printf("%-20s %6u %10.2e %14.3e %8s\n", ef::to_string(kernel).c_str(), seed,
                  flags.eps, result.max_rel_error, pass ? "PASS" : "FAIL");
    }
    std::printf("%-20s %6s %10s %14.3e %8s\n", ef::to_string(kernel).c_str(), "worst", "",
                worst, worst < flags.threshold ? "PASS" : "FAIL");
  }
  return all_pass ? kExitOk : kExitData;
}

void add_common_flags(CLI::App* cmd, CommonEvalFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON run configuration; flags override");
  cmd->add_option("--manifest", flags.manifests, "dataset manifest path (repeatable)");
  cmd->add_option("--wheel", flags.wheels, "emotion wheel config path (repeatable)");
  cmd->add_option("--lemma", flags.lemma, "lemma table path");
  cmd->add_option("--synonyms", flags.synonyms, "synonym table path");
  cmd->add_option("--lexicon", flags.lexicon, "emotion lexicon path (label<TAB>valence)");
  cmd->add_option("--output-dir", flags.output_dir, "directory for output files");
  cmd->add_option("--workers", flags.workers, "worker threads (results are identical)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluation and curation toolkit for descriptive emotion recognition"};
  app.require_subcommand(1);

  CommonEvalFlags eval_flags;
  auto* evaluate = app.add_subcommand("evaluate", "score predictions against ground truth");
  add_common_flags(evaluate, eval_flags);
  evaluate->add_option("--mode", eval_flags.mode, "extraction mode: file, lexicon, llm");
  evaluate->add_option("--prediction", eval_flags.prediction_pairs,
                       "NAME=PATH prediction file (repeatable)");
  evaluate->add_option("--predictions-dir", eval_flags.predictions_dir,
                       "directory of <dataset>.jsonl prediction files");

  ExtractFlags extract_flags;
  auto* extract = app.add_subcommand("extract", "turn free-form outputs into label sets");
  extract->add_option("--input", extract_flags.input, "raw responses (jsonl)")->required();
  extract->add_option("--output", extract_flags.output, "extracted labels (jsonl)")->required();
  extract->add_option("--lexicon", extract_flags.lexicon, "emotion lexicon path");
  extract->add_option("--mode", extract_flags.mode, "lexicon or llm (default lexicon)");
  extract->add_flag("--sentiment", extract_flags.with_sentiment,
                    "also classify sentiment per sample");
  extract->add_flag("--fallback-lexicon", extract_flags.fallback_lexicon,
                    "fall back to the lexicon when an llm reply is malformed");
  extract->add_option("--workers", extract_flags.workers, "worker threads");
  extract->add_option("--timeout", extract_flags.timeout_s, "llm request timeout (seconds)");
  extract->add_option("--retries", extract_flags.retries, "llm retry budget");
  extract->add_option("--concurrency", extract_flags.concurrency, "llm max in-flight requests");

  FilterFlags filter_flags;
  auto* filter = app.add_subcommand("filter", "two-level dataset filtering");
  add_common_flags(filter, filter_flags.common);
  filter->add_option("--records", filter_flags.records, "description records (jsonl)");
  filter->add_option("--votes", filter_flags.votes, "classifier votes (jsonl)");
  filter->add_option("--low", filter_flags.low, "lower length percentile (default 5)");
  filter->add_option("--high", filter_flags.high, "upper length percentile (default 95)");
  filter->add_option("--consistency", filter_flags.consistency,
                     "off, emotion, sentiment, or both (default both)");

  StatsFlags stats_flags;
  auto* stats = app.add_subcommand("stats", "emit dataset histograms as CSV");
  add_common_flags(stats, stats_flags.common);
  stats->add_option("--records", stats_flags.records, "description records (jsonl)");
  stats->add_option("--token-bin-width", stats_flags.token_bin, "token histogram bin width");
  stats->add_option("--duration-bin-width", stats_flags.duration_bin,
                    "duration histogram bin width");

  FuseCheckFlags fuse_flags;
  auto* fuse = app.add_subcommand("fuse-check", "verify fusion kernels by finite differences");
  fuse->add_option("--kernel", fuse_flags.kernel, "all, attention, qformer, or nll");
  fuse->add_option("--seeds", fuse_flags.seeds, "number of random seeds (default 20)");
  fuse->add_option("--eps", fuse_flags.eps, "finite-difference step (default 1e-5)");
  fuse->add_option("--threshold", fuse_flags.threshold, "pass threshold (default 1e-4)");
  fuse->add_option("--dim", fuse_flags.dim, "feature dimension");
  fuse->add_option("--mode", fuse_flags.mode, "attention mode: exact or softmax");
  fuse->add_option("--heads", fuse_flags.heads, "qformer head count");
  fuse->add_option("--queries", fuse_flags.queries, "qformer query token count");
  fuse->add_option("--time-steps", fuse_flags.time_steps, "qformer sequence length");
  fuse->add_option("--length", fuse_flags.length, "nll response length");
  fuse->add_option("--vocab", fuse_flags.vocab, "nll vocabulary size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (evaluate->parsed()) return cmd_evaluate(eval_flags);
    if (extract->parsed()) return cmd_extract(extract_flags);
    if (filter->parsed()) return cmd_filter(filter_flags);
    if (stats->parsed()) return cmd_stats(stats_flags);
    if (fuse->parsed()) return cmd_fuse_check(fuse_flags);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const emeval::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
