#pragma once

// Fully enumerable detection task: K contexts, a softmax policy over the nine
// response templates per context, and the mock critic. Every expectation can
// be computed exactly, which makes the GRPO machinery testable against
// brute-force and finite-difference oracles.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "dialectic/grpo.hpp"
#include "dialectic/response_templates.hpp"
#include "dialectic/reward.hpp"

namespace dialectic {

struct ToyTask {
  std::vector<Verdict> truth;  // one entry per context

  /// Even contexts are Real, odd ones Fake.
  static ToyTask alternating(int num_contexts);

  int num_contexts() const noexcept { return static_cast<int>(truth.size()); }
  Verdict truth_of(int context) const;
  void validate() const;
};

using LogitMatrix = Eigen::Matrix<double, Eigen::Dynamic, kTemplateCount, Eigen::RowMajor>;
using TemplateArray = Eigen::Array<double, kTemplateCount, 1>;

/// Softmax policy, one row of logits per context.
class PolicyParams {
 public:
  explicit PolicyParams(int num_contexts);
  explicit PolicyParams(LogitMatrix logits);

  int num_contexts() const noexcept { return static_cast<int>(logits_.rows()); }
  const LogitMatrix& logits() const noexcept { return logits_; }
  LogitMatrix& logits() noexcept { return logits_; }

  TemplateArray probabilities(int context) const;
  TemplateArray log_probabilities(int context) const;

 private:
  void check_context(int context) const;
  LogitMatrix logits_;
};

/// Reward settings used throughout the toy lab. The length reward is
/// normalized by default so R_len lives on the same scale as the other four
/// components.
struct ToyRewardConfig {
  RewardWeights weights;
  LengthConfig length{1000, true};
};

/// Reward of every template in a context with the given truth (mock critic).
std::array<RewardBreakdown, kTemplateCount> template_rewards(Verdict truth, const ToyRewardConfig& cfg);
TemplateArray template_totals(Verdict truth, const ToyRewardConfig& cfg);

/// Throws std::out_of_range for an unknown context.
RawResponse render(int template_id, const ToyTask& task, int context);

double exact_expected_reward(const PolicyParams& params, int context, Verdict truth,
                             const ToyRewardConfig& cfg);
/// Probability mass on templates whose verdict matches the truth.
double prob_correct(const PolicyParams& params, int context, Verdict truth);
/// Probability mass on dialectic templates.
double prob_dialectic(const PolicyParams& params, int context);

struct ToyGroup {
  int context = 0;
  std::vector<int> template_ids;
  GroupSample sample;
};

ToyGroup sample_group(const PolicyParams& params, const ToyTask& task, int context, int group_size,
                      std::uint64_t seed, const ToyRewardConfig& cfg);

struct SurrogateResult {
  double value = 0;
  LogitMatrix gradient;
};

/// Mean over groups of the group objective, and its analytic gradient with
/// respect to the logits. `old` must be the policy the groups were drawn from.
SurrogateResult surrogate_and_grad(const PolicyParams& params, const PolicyParams& old,
                                   const std::vector<ToyGroup>& groups, const GrpoConfig& cfg);

struct TrainConfig {
  int steps = 200;
  double learning_rate = 0.1;
  std::uint64_t seed = 7;
  GrpoConfig grpo;
  ToyRewardConfig reward;
};

struct TraceRow {
  int step = 0;
  int context = 0;
  double expected_reward = 0;
  double p_correct = 0;
  double p_dialectic = 0;
};

struct TrainingTrace {
  std::vector<TraceRow> rows;  // steps 0..steps, contexts in order
  PolicyParams final_params{1};

  /// Mean over contexts at one step.
  double mean_p_correct(int step) const;
  double mean_p_dialectic(int step) const;
  double mean_expected_reward(int step) const;
};

/// Plain gradient ascent with one GRPO epoch per sampled batch: every step
/// snapshots the old policy, samples one group per context, and moves each
/// context's logits along the gradient of its own group objective.
TrainingTrace train(const ToyTask& task, const TrainConfig& cfg);

/// One JSON object per row.
void write_trace(const TrainingTrace& trace, std::ostream& out);

struct GradCheckResult {
  double max_rel_error = 0;
  std::size_t coordinates_checked = 0;
  double max_abs_value_at_old = 0;  // |J| with params == old, over all points
};

/// Analytic surrogate gradient vs central differences at random parameter
/// points. Coordinates with |analytic| <= 1e-8 are skipped.
GradCheckResult gradient_check(std::uint64_t seed, int points = 20, double step = 1e-5,
                               int num_contexts = 4, int group_size = 8);

struct MonteCarloEstimate {
  double mean = 0;
  double standard_error = 0;
};

/// Samples templates, renders and scores each one from its text.
MonteCarloEstimate monte_carlo_reward(const PolicyParams& params, int context, Verdict truth,
                                      std::size_t samples, std::uint64_t seed,
                                      const ToyRewardConfig& cfg);

}  // namespace dialectic
