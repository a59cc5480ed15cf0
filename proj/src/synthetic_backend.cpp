#include <cmath>

#include "rwlime/error.hpp"
#include "rwlime/scoring.hpp"

namespace rwlime {

void SyntheticSpec::validate() const {
  if (vocab_size < 2) throw Error(ErrorCode::InvalidParams, "synthetic vocabulary needs V >= 2");
  for (auto t : output_tokens) {
    if (t >= vocab_size) throw Error(ErrorCode::InvalidParams, "output token outside vocabulary");
  }
  for (const auto& [id, g] : gold_feature_effects) {
    if (!std::isfinite(g)) throw Error(ErrorCode::InvalidParams, "non-finite feature boost");
    if (num_features != 0 && id >= num_features) {
      throw Error(ErrorCode::InvalidParams, "gold feature id out of range");
    }
  }
  for (const auto& pair : interaction_pairs) {
    if (!std::isfinite(pair.boost)) throw Error(ErrorCode::InvalidParams, "non-finite pair boost");
    if (num_features != 0 && (pair.first >= num_features || pair.second >= num_features)) {
      throw Error(ErrorCode::InvalidParams, "interaction pair id out of range");
    }
  }
}

std::string SyntheticSpec::vocab_token(std::size_t id) { return "v" + std::to_string(id); }

OutputText SyntheticSpec::output() const {
  OutputText out;
  for (auto t : output_tokens) {
    if (!out.text.empty()) out.text += ' ';
    out.tokens.push_back(vocab_token(t));
    out.text += out.tokens.back();
  }
  return out;
}

std::vector<TokenDistribution> synthetic_score(const SyntheticSpec& spec, const Mask& mask) {
  if (spec.num_features != 0 && mask.size() != spec.num_features) {
    throw Error(ErrorCode::LengthMismatch, "mask does not match the synthetic feature universe");
  }
  auto present = [&](std::size_t id) { return id < mask.size() && mask[id] != 0; };

  double boost = 0.0;
  for (const auto& [id, g] : spec.gold_feature_effects) {
    if (present(id)) boost += g;
  }
  for (const auto& pair : spec.interaction_pairs) {
    if (present(pair.first) || present(pair.second)) boost += pair.boost;
  }

  // Target logit `boost`, all others 0; softmax with the max subtracted.
  const double v = static_cast<double>(spec.vocab_size);
  const double top = std::max(boost, 0.0);
  const double e_target = std::exp(boost - top);
  const double e_other = std::exp(-top);
  const double z = e_target + (v - 1.0) * e_other;

  std::vector<TokenDistribution> out;
  out.reserve(spec.output_tokens.size());
  for (auto y : spec.output_tokens) {
    TokenDistribution d;
    for (std::size_t w = 0; w < spec.vocab_size; ++w) {
      d.entries.emplace(SyntheticSpec::vocab_token(w), (w == y ? e_target : e_other) / z);
    }
    d.tail_count = 1;
    out.push_back(std::move(d));
  }
  return out;
}

BackendScores SyntheticBackend::score(const ScoreRequest& request) {
  if (request.mask == nullptr) throw Error(ErrorCode::InvalidParams, "synthetic scoring needs a mask");
  return BackendScores{synthetic_score(spec_, *request.mask), {}};
}

}  // namespace rwlime
