#include "rwlime/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rwlime/error.hpp"

namespace rwlime {

double TokenDistribution::total() const {
  double s = tail_mass;
  for (const auto& [tok, p] : entries) s += p;
  return s;
}

double TokenDistribution::probability(const std::string& token) const {
  if (auto it = entries.find(token); it != entries.end()) return it->second;
  return tail_mass / static_cast<double>(std::max<std::size_t>(tail_count, 1));
}

bool TokenDistribution::normalized(double tol) const {
  if (tail_mass < 0.0) return false;
  for (const auto& [tok, p] : entries) {
    if (p < 0.0) return false;
  }
  return std::abs(total() - 1.0) <= tol;
}

double kl_divergence(const TokenDistribution& p, const TokenDistribution& q) {
  if (!p.normalized() || !q.normalized()) {
    throw Error(ErrorCode::NotNormalized, "KL inputs must each sum to 1 within 1e-6");
  }
  auto term = [](double pv, double qv) {
    if (pv <= 0.0) return 0.0;
    return pv * std::log(pv / std::max(qv, kProbabilityFloor));
  };
  double kl = 0.0;
  for (const auto& [tok, pv] : p.entries) {
    auto it = q.entries.find(tok);
    kl += term(pv, it == q.entries.end() ? 0.0 : it->second);
  }
  // Symbols only q enumerates carry zero p-mass and contribute nothing.
  kl += term(p.tail_mass, q.tail_mass);
  return kl;
}

double negative_log_likelihood(const std::vector<TokenDistribution>& dists,
                               const std::vector<std::string>& output_tokens) {
  if (dists.size() != output_tokens.size()) {
    throw Error(ErrorCode::LengthMismatch, "one distribution per output token is required");
  }
  double nll = 0.0;
  for (std::size_t t = 0; t < dists.size(); ++t) {
    nll -= std::log(std::max(dists[t].probability(output_tokens[t]), kProbabilityFloor));
  }
  return nll;
}

std::string to_string(TargetMode m) { return m == TargetMode::KL ? "kl" : "delta_nll"; }

TargetMode target_mode_from_string(const std::string& s) {
  if (s == "kl") return TargetMode::KL;
  if (s == "delta_nll") return TargetMode::DeltaNLL;
  throw Error(ErrorCode::ConfigError, "unknown target mode '" + s + "'");
}

double regression_target(const ScoreRecord& baseline, const ScoreRecord& perturbed, TargetMode mode) {
  if (baseline.per_token_dists.size() != perturbed.per_token_dists.size()) {
    throw Error(ErrorCode::LengthMismatch, "baseline and perturbed outputs differ in length");
  }
  if (mode == TargetMode::DeltaNLL) return perturbed.nll - baseline.nll;
  const std::size_t t_len = baseline.per_token_dists.size();
  if (t_len == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t t = 0; t < t_len; ++t) {
    sum += kl_divergence(baseline.per_token_dists[t], perturbed.per_token_dists[t]);
  }
  return sum / static_cast<double>(t_len);
}

OutputText make_output(const std::string& text) {
  OutputText out{text, {}};
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.tokens.push_back(tok);
  return out;
}

ScoreRecord score_teacher_forced(ScoringBackend& backend, const ScoreRequest& request) {
  if (request.output == nullptr || request.output->tokens.empty()) {
    throw Error(ErrorCode::EmptyInput, "output y has no tokens to score");
  }
  ScoreRecord rec;
  rec.perturbation_index = request.index;
  BackendScores scores = backend.score(request);
  rec.per_token_dists = std::move(scores.dists);
  rec.tokens = scores.tokens.empty() ? request.output->tokens : std::move(scores.tokens);
  if (rec.per_token_dists.size() != rec.tokens.size() || rec.tokens.empty()) {
    throw Error(ErrorCode::MalformedResponse,
                "backend returned " + std::to_string(rec.per_token_dists.size()) +
                    " distributions for " + std::to_string(rec.tokens.size()) + " output tokens");
  }
  rec.nll = negative_log_likelihood(rec.per_token_dists, rec.tokens);
  return rec;
}

std::string CachedGenerator::generate(const std::string& prompt) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(prompt); it != cache_.end()) return it->second;
  }
  ++calls_;
  std::string out = inner_.generate(prompt);
  std::lock_guard lock(mutex_);
  return cache_.emplace(prompt, std::move(out)).first->second;
}

std::string generate_once(const std::string& prompt, GenerationBackend& backend) {
  if (prompt.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorCode::EmptyInput, "generation prompt is empty");
  }
  std::string y = backend.generate(prompt);
  if (y.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorCode::EmptyGeneration, "large model returned an empty completion");
  }
  return y;
}

}  // namespace rwlime
