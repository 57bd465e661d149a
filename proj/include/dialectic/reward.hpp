#pragma once

// Five-component reward for a (response, ground truth) pair:
//   total = w_acc*R_acc + w_fmt*R_fmt + w_struc*R_struc + w_logic*R_logic + w_len*R_len

#include <cstddef>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "dialectic/backends.hpp"
#include "dialectic/cot_grammar.hpp"

namespace dialectic {

struct RewardWeights {
  double accuracy = 1.0;
  double format = 1.0;
  double structure = 1.0;
  double logic = 1.0;
  double length = 1.0;

  /// Throws std::invalid_argument unless every weight is finite and >= 0.
  void validate() const;
};

struct LengthConfig {
  std::size_t l_max = 1000;
  bool normalize = false;  // divide the length reward by l_max

  void validate() const;
};

struct RewardBreakdown {
  double accuracy = 0;   // R_acc in {0, 1}
  double format = 0;     // R_fmt in {0, 1}
  double structure = 0;  // R_struc in {-1, +1}
  double logic = 0;      // R_logic in [0, 1]
  double length = 0;     // R_len
  double total = 0;
  bool critic_degraded = false;  // logic was substituted with 0 after a critic failure

  bool operator==(const RewardBreakdown&) const = default;
};

/// What to do when the critic cannot be reached.
enum class CriticFailure {
  Fail,        // propagate the BackendError
  Substitute,  // use 0.0 and mark the breakdown degraded
};

double reward_accuracy(const ParsedResponse& parsed, Verdict truth) noexcept;
double reward_format(const ParsedResponse& parsed) noexcept;
double reward_structure(const ParsedResponse& parsed) noexcept;
/// Critic score clamped to [0, 1]. Propagates critic errors.
double reward_logic(std::string_view think_text, Critic& critic);
/// Piecewise-linear length reward:
///   correct: min(l_max - l, l_max / 2)
///   wrong:   min(l - l_max, 0)
double reward_length(std::size_t token_count, bool correct, const LengthConfig& cfg);

/// Weighted sum in a fixed order; reused when auditing stored breakdowns.
double weighted_total(const RewardBreakdown& b, const RewardWeights& w) noexcept;

RewardBreakdown reward_total(const ParsedResponse& parsed, std::size_t token_count, Verdict truth,
                             Critic& critic, const RewardWeights& weights,
                             const LengthConfig& cfg,
                             CriticFailure on_critic_failure = CriticFailure::Fail);

inline RewardBreakdown reward_total(const RawResponse& raw, Verdict truth, Critic& critic,
                                    const RewardWeights& weights, const LengthConfig& cfg,
                                    CriticFailure on_critic_failure = CriticFailure::Fail) {
  return reward_total(parse(raw), raw.token_count, truth, critic, weights, cfg, on_critic_failure);
}

/// {"r_acc", "r_fmt", "r_struc", "r_logic", "r_len", "total", "critic_degraded"}
nlohmann::json to_json(const RewardBreakdown& b);

}  // namespace dialectic
