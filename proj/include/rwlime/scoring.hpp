#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rwlime/segmentation.hpp"

namespace rwlime {

/// Predictive distribution at one output position. Top-k style: enumerated
/// entries plus a lump of unenumerated mass.
struct TokenDistribution {
  std::map<std::string, double> entries;
  double tail_mass = 0.0;
  /// Number of vocabulary items the tail is spread over; 1 when unknown.
  std::size_t tail_count = 1;

  double total() const;
  /// Probability of `token`, falling back to a uniform share of the tail.
  double probability(const std::string& token) const;
  bool normalized(double tol = 1e-6) const;
};

inline constexpr double kProbabilityFloor = 1e-12;

/// KL(p || q) in nats over the union of enumerated supports plus one tail
/// pseudo-symbol per side. q is floored at 1e-12.
double kl_divergence(const TokenDistribution& p, const TokenDistribution& q);

/// Teacher-forced sum of -log p(y_t), floored at 1e-12.
double negative_log_likelihood(const std::vector<TokenDistribution>& dists,
                               const std::vector<std::string>& output_tokens);

enum class TargetMode { KL, DeltaNLL };

std::string to_string(TargetMode m);
TargetMode target_mode_from_string(const std::string& s);

struct ScoreRecord {
  std::size_t perturbation_index = 0;
  std::vector<TokenDistribution> per_token_dists;
  std::vector<std::string> tokens;
  double nll = 0.0;
  double target = 0.0;
  double distance = 0.0;
  double weight = 1.0;
};

/// Mean per-token KL(baseline || perturbed), or NLL_j - NLL_0.
double regression_target(const ScoreRecord& baseline, const ScoreRecord& perturbed, TargetMode mode);

/// The fixed output y, both as text and as the token sequence the scorer
/// evaluates it with.
struct OutputText {
  std::string text;
  std::vector<std::string> tokens;
};

/// Whitespace split of `text`.
OutputText make_output(const std::string& text);

struct ScoreRequest {
  std::size_t index = 0;
  const Mask* mask = nullptr;
  std::string input;
  const OutputText* output = nullptr;
};

/// Distributions for each scored output position. `tokens` holds the token
/// observed at each position when the backend tokenizes y itself; empty
/// means the request's output tokens.
struct BackendScores {
  std::vector<TokenDistribution> dists;
  std::vector<std::string> tokens;
};

/// Surrogate scorer: per output position, the next-token distribution given
/// (masked input, y_<t).
class ScoringBackend {
 public:
  virtual ~ScoringBackend() = default;
  virtual BackendScores score(const ScoreRequest& request) = 0;
  virtual std::size_t max_parallel() const { return 1; }
};

/// Scores `request` and fills the distribution and NLL fields of a record.
ScoreRecord score_teacher_forced(ScoringBackend& backend, const ScoreRequest& request);

/// Large model used once per instance to produce y.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual std::string generate(const std::string& prompt) = 0;
};

class EchoGenerator : public GenerationBackend {
 public:
  std::string generate(const std::string& prompt) override { return prompt; }
};

/// Memoizes generations per prompt and counts real backend calls.
class CachedGenerator : public GenerationBackend {
 public:
  explicit CachedGenerator(GenerationBackend& inner) : inner_(inner) {}
  std::string generate(const std::string& prompt) override;
  std::size_t calls() const { return calls_.load(); }

 private:
  GenerationBackend& inner_;
  std::mutex mutex_;
  std::unordered_map<std::string, std::string> cache_;
  std::atomic<std::size_t> calls_{0};
};

/// One call to the large model; rejects empty prompts and empty outputs.
std::string generate_once(const std::string& prompt, GenerationBackend& backend);

/// Forwards to another backend and counts calls.
class CountingBackend : public ScoringBackend {
 public:
  explicit CountingBackend(ScoringBackend& inner) : inner_(inner) {}
  BackendScores score(const ScoreRequest& request) override {
    ++calls_;
    return inner_.score(request);
  }
  std::size_t max_parallel() const override { return inner_.max_parallel(); }
  std::size_t calls() const { return calls_.load(); }

 private:
  ScoringBackend& inner_;
  std::atomic<std::size_t> calls_{0};
};

struct InteractionPair {
  std::size_t first = 0;
  std::size_t second = 0;
  double boost = 0.0;
};

/// Planted ground truth for the synthetic scorer.
struct SyntheticSpec {
  std::size_t vocab_size = 2;
  std::vector<std::size_t> output_tokens;
  std::map<std::size_t, double> gold_feature_effects;
  std::vector<InteractionPair> interaction_pairs;
  std::size_t num_features = 0;

  void validate() const;
  static std::string vocab_token(std::size_t id);
  /// Output tokens rendered as vocabulary strings.
  OutputText output() const;
};

/// Softmax over V logits per output position: 0 everywhere except y_t, which
/// gets gamma_i for each present gold feature, plus each pair's boost unless
/// both members are masked.
std::vector<TokenDistribution> synthetic_score(const SyntheticSpec& spec, const Mask& mask);

class SyntheticBackend : public ScoringBackend {
 public:
  explicit SyntheticBackend(SyntheticSpec spec, std::size_t max_parallel = 1)
      : spec_(std::move(spec)), max_parallel_(max_parallel) {
    spec_.validate();
  }
  BackendScores score(const ScoreRequest& request) override;
  std::size_t max_parallel() const override { return max_parallel_; }
  const SyntheticSpec& spec() const { return spec_; }

 private:
  SyntheticSpec spec_;
  std::size_t max_parallel_;
};

}  // namespace rwlime
