#pragma once

// Chat-completion client for the LLM-backed extraction path. Plain HTTP
// (point it at a local inference server or a gateway); request/response JSON
// follows the de-facto chat-completions wire format.

#include <cstdlib>
#include <map>
#include <mutex>
#include <semaphore>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "emeval/errors.hpp"
#include "emeval/extraction.hpp"
#include "emeval/label.hpp"
#include "emeval/lexicon.hpp"
#include "emeval/prompts.hpp"

namespace emeval {

struct LlmClientConfig {
  std::string endpoint;  // "http://host:port"
  std::string model_name = "default";
  std::string api_key;   // optional bearer token
  std::string chat_path = "/v1/chat/completions";
  double timeout_s = 30.0;
  std::size_t max_retries = 2;
  std::size_t max_concurrency = 4;

  void validate() const {
    if (endpoint.empty()) throw InvariantViolation("llm client: endpoint must be set");
    if (!(timeout_s > 0.0)) throw InvariantViolation("llm client: timeout must be > 0");
    if (max_concurrency < 1) throw InvariantViolation("llm client: max_concurrency must be >= 1");
  }

  // Credentials come from the environment only: EMEVAL_LLM_ENDPOINT,
  // EMEVAL_LLM_MODEL, EMEVAL_LLM_API_KEY.
  static LlmClientConfig from_env() {
    LlmClientConfig cfg;
    if (const char* e = std::getenv("EMEVAL_LLM_ENDPOINT")) cfg.endpoint = e;
    if (const char* m = std::getenv("EMEVAL_LLM_MODEL")) cfg.model_name = m;
    if (const char* k = std::getenv("EMEVAL_LLM_API_KEY")) cfg.api_key = k;
    return cfg;
  }
};

class LlmClient {
 public:
  explicit LlmClient(LlmClientConfig cfg)
      : cfg_(std::move(cfg)),
        in_flight_(static_cast<std::ptrdiff_t>(cfg_.max_concurrency)) {
    cfg_.validate();
  }

  const LlmClientConfig& config() const noexcept { return cfg_; }

  // One chat completion. Results are cached per (sample_id, prompt hash), so
  // re-running a corpus never re-queries the endpoint within a process.
  // Throws NetworkError once the retry budget is spent.
  std::string complete(const std::string& sample_id, const std::string& prompt) {
    const std::string key = cache_key(sample_id, prompt);
    {
      std::lock_guard lock(mu_);
      if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    const std::string reply = post_with_retries(prompt);
    std::lock_guard lock(mu_);
    return cache_.emplace(key, reply).first->second;
  }

  // Appendix-style two-step pipeline, step one: free-form text -> label set.
  LabelSet extract_labels(const RawResponse& r) {
    return parse_label_list(complete(r.sample_id, build_extraction_prompt(r.text)));
  }

  // Step two: label set -> polarity. The reply must name exactly one of the
  // three candidates.
  SentimentPolarity classify_sentiment(const std::string& sample_id, const LabelSet& labels) {
    const std::string reply = complete(sample_id, build_sentiment_prompt(labels));
    std::string lower;
    lower.reserve(reply.size());
    for (char c : reply) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    int found = 0;
    SentimentPolarity out = SentimentPolarity::neutral;
    for (auto p : {SentimentPolarity::positive, SentimentPolarity::negative,
                   SentimentPolarity::neutral}) {
      if (lower.find(to_string(p)) != std::string::npos) {
        ++found;
        out = p;
      }
    }
    if (found != 1) {
      throw MalformedReply("sentiment reply names " + std::to_string(found) +
                           " candidates: \"" + reply + "\"");
    }
    return out;
  }

  // Clue-merge wire contract: returns the raw merged description.
  std::string merge_clues(const std::string& sample_id, const std::string& audio_clue,
                          const std::string& video_clue, const std::string& subtitle) {
    return complete(sample_id, build_clue_merge_prompt(audio_clue, video_clue, subtitle));
  }

 private:
  static std::string cache_key(const std::string& sample_id, const std::string& prompt) {
    return sample_id + "#" + std::to_string(std::hash<std::string>{}(prompt));
  }

  std::string post_with_retries(const std::string& prompt) {
    nlohmann::json request;
    request["model"] = cfg_.model_name;
    request["temperature"] = 0;
    request["messages"] = nlohmann::json::array(
        {nlohmann::json{{"role", "user"}, {"content", prompt}}});
    const std::string body = request.dump();

    std::string last_error;
    for (std::size_t attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      in_flight_.acquire();
      httplib::Client cli(cfg_.endpoint);
      cli.set_connection_timeout(std::chrono::milliseconds(
          static_cast<long long>(cfg_.timeout_s * 1000)));
      cli.set_read_timeout(std::chrono::milliseconds(
          static_cast<long long>(cfg_.timeout_s * 1000)));
      if (!cfg_.api_key.empty()) cli.set_bearer_token_auth(cfg_.api_key);
      auto res = cli.Post(cfg_.chat_path, body, "application/json");
      in_flight_.release();

      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "http status " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw NetworkError("llm endpoint returned status " + std::to_string(res->status) +
                           ": " + res->body);
      }
      try {
        auto doc = nlohmann::json::parse(res->body);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw MalformedReply(std::string("unexpected completion payload: ") + e.what());
      }
    }
    throw NetworkError("llm request failed after " + std::to_string(cfg_.max_retries + 1) +
                       " attempts (" + last_error + ")");
  }

  LlmClientConfig cfg_;
  std::counting_semaphore<> in_flight_;
  std::mutex mu_;
  std::map<std::string, std::string> cache_;
};

// Convenience wrappers matching the one-shot call shape.
inline LabelSet extract_labels_llm(const RawResponse& r, const LlmClientConfig& cfg) {
  LlmClient client(cfg);
  return client.extract_labels(r);
}

inline SentimentPolarity classify_sentiment_llm(const std::string& sample_id,
                                                const LabelSet& labels,
                                                const LlmClientConfig& cfg) {
  LlmClient client(cfg);
  return client.classify_sentiment(sample_id, labels);
}

}  // namespace emeval
