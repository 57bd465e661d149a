#include "dialectic/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dialectic/errors.hpp"

namespace dialectic {

void RewardWeights::validate() const {
  for (double w : {accuracy, format, structure, logic, length})
    if (!std::isfinite(w) || w < 0)
      throw std::invalid_argument("reward weights must be finite and nonnegative");
}

void LengthConfig::validate() const {
  if (l_max < 1) throw std::invalid_argument("l_max must be >= 1");
}

double reward_accuracy(const ParsedResponse& parsed, Verdict truth) noexcept {
  return parsed.verdict && *parsed.verdict == truth ? 1.0 : 0.0;
}

double reward_format(const ParsedResponse& parsed) noexcept { return parsed.format_ok ? 1.0 : 0.0; }

double reward_structure(const ParsedResponse& parsed) noexcept {
  return match_dialectic(parsed) ? 1.0 : -1.0;
}

double reward_logic(std::string_view think_text, Critic& critic) {
  const double raw = critic.score(think_text);
  if (std::isnan(raw)) throw MalformedPayloadError("critic returned NaN");
  return std::clamp(raw, 0.0, 1.0);
}

double reward_length(std::size_t token_count, bool correct, const LengthConfig& cfg) {
  cfg.validate();
  const double l = static_cast<double>(token_count);
  const double l_max = static_cast<double>(cfg.l_max);
  const double value = correct ? std::min(l_max - l, 0.5 * l_max) : std::min(l - l_max, 0.0);
  return cfg.normalize ? value / l_max : value;
}

double weighted_total(const RewardBreakdown& b, const RewardWeights& w) noexcept {
  return w.accuracy * b.accuracy + w.format * b.format + w.structure * b.structure +
         w.logic * b.logic + w.length * b.length;
}

RewardBreakdown reward_total(const ParsedResponse& parsed, std::size_t token_count, Verdict truth,
                             Critic& critic, const RewardWeights& weights,
                             const LengthConfig& cfg, CriticFailure on_critic_failure) {
  weights.validate();
  RewardBreakdown b;
  b.accuracy = reward_accuracy(parsed, truth);
  b.format = reward_format(parsed);
  b.structure = reward_structure(parsed);
  try {
    b.logic = reward_logic(parsed.think_block.value_or(""), critic);
  } catch (const BackendError&) {
    if (on_critic_failure == CriticFailure::Fail) throw;
    b.logic = 0.0;
    b.critic_degraded = true;
  }
  b.length = reward_length(token_count, b.accuracy == 1.0, cfg);
  b.total = weighted_total(b, weights);
  return b;
}

nlohmann::json to_json(const RewardBreakdown& b) {
  return nlohmann::json{{"r_acc", b.accuracy},   {"r_fmt", b.format},   {"r_struc", b.structure},
                        {"r_logic", b.logic},    {"r_len", b.length},   {"total", b.total},
                        {"critic_degraded", b.critic_degraded}};
}

}  // namespace dialectic
