#include "rwlime/http_backend.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <thread>

#include "rwlime/error.hpp"

namespace rwlime {
namespace {

using json = nlohmann::json;

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::ConfigError, "endpoint URL needs a scheme: '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  if (path_start != std::string::npos) out.prefix = url.substr(path_start);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

class HttplibTransport : public HttpTransport {
 public:
  explicit HttplibTransport(const BackendConfig& cfg) : cfg_(cfg), url_(split_url(cfg.endpoint_url)) {}

  HttpResponse post(const std::string& path, const std::string& json_body) override {
    // httplib clients are not thread-safe; one per request keeps fan-out simple.
    httplib::Client client(url_.origin);
    const auto timeout = std::chrono::milliseconds(cfg_.timeout_ms);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                                  static_cast<time_t>((cfg_.timeout_ms % 1000) * 1000));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                            static_cast<time_t>((cfg_.timeout_ms % 1000) * 1000));
    httplib::Headers headers;
    if (!cfg_.api_token.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_token);
    auto res = client.Post(url_.prefix + path, headers, json_body, "application/json");
    if (!res) return HttpResponse{0, httplib::to_string(res.error())};
    return HttpResponse{res->status, res->body};
  }

 private:
  BackendConfig cfg_;
  SplitUrl url_;
};

bool retryable(int status) { return status == 0 || status == 408 || status == 429 || status >= 500; }

// POST with the retry policy; returns the parsed 200 body.
json post_json(const BackendConfig& cfg, HttpTransport& transport, const std::string& path,
               const json& body) {
  const std::string payload = body.dump();
  HttpResponse res;
  for (int attempt = 0; attempt <= cfg.retries; ++attempt) {
    if (attempt > 0 && cfg.retry_backoff_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(cfg.retry_backoff_ms << (attempt - 1)));
    }
    res = transport.post(path, payload);
    if (res.status == 200) break;
    if (res.status == 401 || res.status == 403) {
      throw Error(ErrorCode::Unauthorized, "server rejected credentials (HTTP " +
                                               std::to_string(res.status) + ")");
    }
    if (!retryable(res.status)) break;
  }
  if (res.status != 200) {
    throw Error(ErrorCode::BackendUnavailable,
                path + " failed with HTTP " + std::to_string(res.status) + " after " +
                    std::to_string(cfg.retries) + " retries: " + res.body.substr(0, 200));
  }
  try {
    return json::parse(res.body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedResponse, std::string("response is not JSON: ") + e.what());
  }
}

}  // namespace

void BackendConfig::load_token_from_env() {
  if (const char* tok = std::getenv("RL_API_TOKEN"); tok != nullptr) api_token = tok;
}

std::unique_ptr<HttpTransport> make_http_transport(const BackendConfig& cfg) {
  return std::make_unique<HttplibTransport>(cfg);
}

ReplayTransport::ReplayTransport(const std::string& fixture_path) {
  std::ifstream in(fixture_path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open fixture " + fixture_path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const auto& r = j.at("response");
      entries_.push_back(Entry{j.at("path").get<std::string>(), j.at("request").dump(),
                               HttpResponse{r.at("status").get<int>(),
                                            r.at("body").is_string() ? r.at("body").get<std::string>()
                                                                     : r.at("body").dump()}});
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, "bad fixture line in " + fixture_path + ": " + e.what());
    }
  }
}

HttpResponse ReplayTransport::post(const std::string& path, const std::string& json_body) {
  std::string request;
  try {
    request = json::parse(json_body).dump();
  } catch (const json::exception&) {
    return HttpResponse{400, "request body is not JSON"};
  }
  std::lock_guard lock(mutex_);
  ++requests_;
  for (const auto& e : entries_) {
    if (e.path == path && e.request == request) return e.response;
  }
  return HttpResponse{404, "no fixture entry for request"};
}

std::vector<TokenLogprobs> parse_completion_logprobs(const std::string& body, std::size_t prompt_chars) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedResponse, std::string("response is not JSON: ") + e.what());
  }
  const json* lp = nullptr;
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const auto& choice = j["choices"][0];
    if (choice.contains("logprobs") && choice["logprobs"].is_object()) lp = &choice["logprobs"];
  }
  if (lp == nullptr) throw Error(ErrorCode::MalformedResponse, "response carries no logprobs");
  for (const char* key : {"tokens", "token_logprobs", "top_logprobs", "text_offset"}) {
    if (!lp->contains(key) || !(*lp)[key].is_array()) {
      throw Error(ErrorCode::MalformedResponse, std::string("logprobs.") + key + " missing");
    }
  }
  const auto& tokens = (*lp)["tokens"];
  const auto& token_lp = (*lp)["token_logprobs"];
  const auto& top = (*lp)["top_logprobs"];
  const auto& offsets = (*lp)["text_offset"];
  if (token_lp.size() != tokens.size() || top.size() != tokens.size() ||
      offsets.size() != tokens.size()) {
    throw Error(ErrorCode::MalformedResponse, "logprobs arrays differ in length");
  }
  std::vector<TokenLogprobs> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (offsets[i].get<std::size_t>() < prompt_chars) continue;
    if (token_lp[i].is_null() || !top[i].is_object()) {
      throw Error(ErrorCode::MalformedResponse, "continuation token without logprobs");
    }
    TokenLogprobs pos;
    pos.token = tokens[i].get<std::string>();
    pos.logprob = token_lp[i].get<double>();
    for (const auto& [tok, v] : top[i].items()) pos.top.emplace(tok, v.get<double>());
    out.push_back(std::move(pos));
  }
  return out;
}

std::vector<TokenLogprobs> fetch_token_logprobs(const BackendConfig& cfg, HttpTransport& transport,
                                               const std::string& prompt,
                                               const std::string& continuation) {
  if (cfg.kind != BackendKind::HttpLogprob) {
    throw Error(ErrorCode::ConfigError, "logprob fetch needs an HTTP backend config");
  }
  json body = {{"model", cfg.model},
               {"prompt", prompt + continuation},
               {"max_tokens", 0},
               {"echo", true},
               {"logprobs", cfg.top_k_logprobs},
               {"temperature", 0}};
  const json res = post_json(cfg, transport, "/completions", body);
  return parse_completion_logprobs(res.dump(), prompt.size());
}

TokenDistribution to_distribution(const TokenLogprobs& position) {
  TokenDistribution d;
  for (const auto& [tok, lp] : position.top) d.entries[tok] = std::exp(lp);
  d.entries.emplace(position.token, std::exp(position.logprob));
  double sum = 0.0;
  for (const auto& [tok, p] : d.entries) sum += p;
  if (sum > 1.0) {
    // Server-side rounding can push the enumerated mass a hair past 1.
    for (auto& [tok, p] : d.entries) p /= sum;
    sum = 1.0;
  }
  d.tail_mass = 1.0 - sum;
  return d;
}

HttpLogprobBackend::HttpLogprobBackend(BackendConfig cfg, std::shared_ptr<HttpTransport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)) {}

BackendScores HttpLogprobBackend::score(const ScoreRequest& request) {
  if (request.output == nullptr) throw Error(ErrorCode::EmptyInput, "no output to score");
  const auto positions =
      fetch_token_logprobs(cfg_, *transport_, request.input + cfg_.separator, request.output->text);
  BackendScores out;
  for (const auto& p : positions) {
    out.dists.push_back(to_distribution(p));
    out.tokens.push_back(p.token);
  }
  if (out.dists.empty()) throw Error(ErrorCode::MalformedResponse, "no continuation tokens scored");
  return out;
}

HttpChatGenerator::HttpChatGenerator(BackendConfig cfg, std::shared_ptr<HttpTransport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)) {}

std::string HttpChatGenerator::generate(const std::string& prompt) {
  json body = {{"model", cfg_.model},
               {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
               {"temperature", 0}};
  const json res = post_json(cfg_, *transport_, "/chat/completions", body);
  try {
    return res.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedResponse, std::string("chat response: ") + e.what());
  }
}

HttpEmbeddingProvider::HttpEmbeddingProvider(BackendConfig cfg, std::shared_ptr<HttpTransport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)) {}

Eigen::MatrixXd HttpEmbeddingProvider::embed(const std::vector<std::string>& texts, std::size_t dim) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(texts.size()), static_cast<Eigen::Index>(dim));
  if (texts.empty()) return out;
  json body = {{"model", cfg_.model}, {"input", texts}};
  const json res = post_json(cfg_, *transport_, "/embeddings", body);
  try {
    const auto& data = res.at("data");
    if (data.size() != texts.size()) {
      throw Error(ErrorCode::MalformedResponse, "embedding count differs from input count");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& vec = data[i].at("embedding");
      if (vec.size() < dim) {
        throw Error(ErrorCode::MalformedResponse, "embedding narrower than configured dimension");
      }
      // Wider embeddings are truncated to the leading `dim` coordinates.
      for (std::size_t k = 0; k < dim; ++k) {
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = vec[k].get<double>();
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedResponse, std::string("embedding response: ") + e.what());
  }
  return out;
}

}  // namespace rwlime
