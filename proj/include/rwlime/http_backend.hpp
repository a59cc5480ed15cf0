#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "rwlime/geometry.hpp"
#include "rwlime/scoring.hpp"

namespace rwlime {

enum class BackendKind { SyntheticMock, HttpLogprob };

struct BackendConfig {
  BackendKind kind = BackendKind::SyntheticMock;
  /// Base URL of an OpenAI-compatible server, e.g. "http://localhost:8000/v1".
  std::string endpoint_url;
  std::string model;
  std::size_t top_k_logprobs = 20;
  std::size_t max_parallel = 1;
  int timeout_ms = 60000;
  int retries = 3;
  int retry_backoff_ms = 250;
  std::string api_token;
  /// Placed between the masked input and y when scoring.
  std::string separator = "\n";

  /// Copies RL_API_TOKEN into api_token when set.
  void load_token_from_env();
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  /// `path` is relative to the endpoint base, e.g. "/completions". Network
  /// failures are reported as status 0.
  virtual HttpResponse post(const std::string& path, const std::string& json_body) = 0;
};

std::unique_ptr<HttpTransport> make_http_transport(const BackendConfig& cfg);

/// Serves responses from a JSONL fixture, one
/// {"path", "request", "response": {"status", "body"}} object per line,
/// matched on path and request JSON.
class ReplayTransport : public HttpTransport {
 public:
  explicit ReplayTransport(const std::string& fixture_path);
  HttpResponse post(const std::string& path, const std::string& json_body) override;
  std::size_t requests() const { return requests_; }

 private:
  struct Entry {
    std::string path;
    std::string request;  // canonical JSON dump
    HttpResponse response;
  };
  std::vector<Entry> entries_;
  std::mutex mutex_;
  std::size_t requests_ = 0;
};

/// Top-k logprobs at one scored position plus the observed token.
struct TokenLogprobs {
  std::string token;
  double logprob = 0.0;
  std::map<std::string, double> top;
};

/// POSTs {model, prompt, max_tokens: 0, echo: true, logprobs: k} and returns
/// the positions whose text offset falls inside `continuation`. Retries 408,
/// 429, 5xx and network errors.
std::vector<TokenLogprobs> fetch_token_logprobs(const BackendConfig& cfg, HttpTransport& transport,
                                               const std::string& prompt,
                                               const std::string& continuation);

std::vector<TokenLogprobs> parse_completion_logprobs(const std::string& body, std::size_t prompt_chars);

TokenDistribution to_distribution(const TokenLogprobs& position);

class HttpLogprobBackend : public ScoringBackend {
 public:
  HttpLogprobBackend(BackendConfig cfg, std::shared_ptr<HttpTransport> transport);
  BackendScores score(const ScoreRequest& request) override;
  std::size_t max_parallel() const override { return cfg_.max_parallel; }

 private:
  BackendConfig cfg_;
  std::shared_ptr<HttpTransport> transport_;
};

/// Single-shot generation through /chat/completions.
class HttpChatGenerator : public GenerationBackend {
 public:
  HttpChatGenerator(BackendConfig cfg, std::shared_ptr<HttpTransport> transport);
  std::string generate(const std::string& prompt) override;

 private:
  BackendConfig cfg_;
  std::shared_ptr<HttpTransport> transport_;
};

/// Per-token base embeddings from /embeddings (one input per token text).
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(BackendConfig cfg, std::shared_ptr<HttpTransport> transport);
  Eigen::MatrixXd embed(const std::vector<std::string>& texts, std::size_t dim) override;

 private:
  BackendConfig cfg_;
  std::shared_ptr<HttpTransport> transport_;
};

}  // namespace rwlime
