#include "dialectic/toy_lab.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "dialectic/random.hpp"

namespace dialectic {

ToyTask ToyTask::alternating(int num_contexts) {
  ToyTask task;
  for (int k = 0; k < num_contexts; ++k) task.truth.push_back(k % 2 == 0 ? Verdict::Real : Verdict::Fake);
  task.validate();
  return task;
}

Verdict ToyTask::truth_of(int context) const {
  if (context < 0 || context >= num_contexts())
    throw std::out_of_range("context " + std::to_string(context) + " outside [0, " +
                            std::to_string(num_contexts()) + ")");
  return truth[static_cast<std::size_t>(context)];
}

void ToyTask::validate() const {
  if (num_contexts() < 2) throw std::invalid_argument("toy task needs at least 2 contexts");
}

PolicyParams::PolicyParams(int num_contexts) : logits_(LogitMatrix::Zero(num_contexts, kTemplateCount)) {
  if (num_contexts < 1) throw std::invalid_argument("policy needs at least one context");
}

PolicyParams::PolicyParams(LogitMatrix logits) : logits_(std::move(logits)) {
  if (logits_.rows() < 1) throw std::invalid_argument("policy needs at least one context");
  if (!logits_.allFinite()) throw std::invalid_argument("policy logits must be finite");
}

void PolicyParams::check_context(int context) const {
  if (context < 0 || context >= num_contexts())
    throw std::out_of_range("context " + std::to_string(context) + " outside policy rows");
}

TemplateArray PolicyParams::probabilities(int context) const {
  check_context(context);
  const TemplateArray row = logits_.row(context).transpose().array();
  const TemplateArray e = (row - row.maxCoeff()).exp();
  return e / e.sum();
}

TemplateArray PolicyParams::log_probabilities(int context) const {
  check_context(context);
  const TemplateArray row = logits_.row(context).transpose().array();
  const double m = row.maxCoeff();
  return row - m - std::log((row - m).exp().sum());
}

std::array<RewardBreakdown, kTemplateCount> template_rewards(Verdict truth, const ToyRewardConfig& cfg) {
  MockCritic critic;
  std::array<RewardBreakdown, kTemplateCount> out;
  for (int t = 0; t < kTemplateCount; ++t)
    out[static_cast<std::size_t>(t)] =
        reward_total(render_template(t, 0), truth, critic, cfg.weights, cfg.length);
  return out;
}

TemplateArray template_totals(Verdict truth, const ToyRewardConfig& cfg) {
  const auto rewards = template_rewards(truth, cfg);
  TemplateArray out;
  for (int t = 0; t < kTemplateCount; ++t) out[t] = rewards[static_cast<std::size_t>(t)].total;
  return out;
}

RawResponse render(int template_id, const ToyTask& task, int context) {
  (void)task.truth_of(context);
  return render_template(template_id, context);
}

double exact_expected_reward(const PolicyParams& params, int context, Verdict truth,
                             const ToyRewardConfig& cfg) {
  return (params.probabilities(context) * template_totals(truth, cfg)).sum();
}

double prob_correct(const PolicyParams& params, int context, Verdict truth) {
  const auto p = params.probabilities(context);
  double mass = 0;
  for (int t = 0; t < kTemplateCount; ++t) {
    const auto& spec = template_space()[static_cast<std::size_t>(t)];
    if (!spec.malformed && spec.verdict == truth) mass += p[t];
  }
  return mass;
}

double prob_dialectic(const PolicyParams& params, int context) {
  const auto p = params.probabilities(context);
  double mass = 0;
  for (int t = 0; t < kTemplateCount; ++t) {
    const auto& spec = template_space()[static_cast<std::size_t>(t)];
    if (!spec.malformed && spec.structure == Structure::Dialectic) mass += p[t];
  }
  return mass;
}

ToyGroup sample_group(const PolicyParams& params, const ToyTask& task, int context, int group_size,
                      std::uint64_t seed, const ToyRewardConfig& cfg) {
  if (group_size < 2) throw std::invalid_argument("group size must be >= 2");
  const auto truth = task.truth_of(context);
  const auto probs = params.probabilities(context);
  const auto logp = params.log_probabilities(context);
  const auto totals = template_totals(truth, cfg);

  ToyGroup g;
  g.context = context;
  g.sample.prompt_id = "ctx-" + std::to_string(context);
  g.sample.logp_old.resize(group_size);
  g.sample.rewards.resize(group_size);
  Rng rng(seed);
  for (int i = 0; i < group_size; ++i) {
    const int t = sample_index(probs, rng);
    g.template_ids.push_back(t);
    g.sample.responses.push_back(render_template(t, context));
    g.sample.logp_old[i] = logp[t];
    g.sample.rewards[i] = totals[t];
  }
  return g;
}

SurrogateResult surrogate_and_grad(const PolicyParams& params, const PolicyParams& old,
                                   const std::vector<ToyGroup>& groups, const GrpoConfig& cfg) {
  if (params.num_contexts() != old.num_contexts())
    throw std::invalid_argument("params and old policy differ in context count");
  if (groups.empty()) throw std::invalid_argument("surrogate needs at least one group");

  SurrogateResult out{0.0, LogitMatrix::Zero(params.num_contexts(), kTemplateCount)};
  for (const auto& g : groups) {
    const auto n = g.sample.size();
    if (static_cast<Eigen::Index>(g.template_ids.size()) != n)
      throw std::invalid_argument("group template ids do not match its responses");
    const auto logp_new_all = params.log_probabilities(g.context);
    const auto logp_old_all = old.log_probabilities(g.context);
    Vector<double> logp_new(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int t = g.template_ids[static_cast<std::size_t>(i)];
      if (t < 0 || t >= kTemplateCount) throw std::invalid_argument("template id out of range");
      if (std::abs(logp_old_all[t] - g.sample.logp_old[i]) > 1e-9)
        throw std::invalid_argument("group " + g.sample.prompt_id + " was not drawn from the old policy");
      logp_new[i] = logp_new_all[t];
    }
    out.value += group_objective(g.sample, logp_new, cfg);

    // d log pi(t | x) / d logits(x, :) = onehot(t) - pi(. | x)
    const auto dlogp = group_objective_grad(g.sample, logp_new, cfg);
    const auto probs = params.probabilities(g.context);
    for (Eigen::Index i = 0; i < n; ++i) {
      out.gradient.row(g.context) -= dlogp[i] * probs.matrix().transpose();
      out.gradient(g.context, g.template_ids[static_cast<std::size_t>(i)]) += dlogp[i];
    }
  }
  const double inv = 1.0 / static_cast<double>(groups.size());
  out.value *= inv;
  out.gradient *= inv;
  return out;
}

namespace {

void record(TrainingTrace& trace, const PolicyParams& params, const ToyTask& task, int step,
            const ToyRewardConfig& cfg) {
  for (int k = 0; k < task.num_contexts(); ++k) {
    const auto truth = task.truth_of(k);
    trace.rows.push_back({step, k, exact_expected_reward(params, k, truth, cfg),
                          prob_correct(params, k, truth), prob_dialectic(params, k)});
  }
}

template <typename Pick>
double mean_at(const TrainingTrace& trace, int step, Pick pick) {
  double sum = 0;
  int n = 0;
  for (const auto& r : trace.rows)
    if (r.step == step) {
      sum += pick(r);
      ++n;
    }
  if (n == 0) throw std::out_of_range("no trace rows for step " + std::to_string(step));
  return sum / n;
}

}  // namespace

double TrainingTrace::mean_p_correct(int step) const {
  return mean_at(*this, step, [](const TraceRow& r) { return r.p_correct; });
}
double TrainingTrace::mean_p_dialectic(int step) const {
  return mean_at(*this, step, [](const TraceRow& r) { return r.p_dialectic; });
}
double TrainingTrace::mean_expected_reward(int step) const {
  return mean_at(*this, step, [](const TraceRow& r) { return r.expected_reward; });
}

TrainingTrace train(const ToyTask& task, const TrainConfig& cfg) {
  task.validate();
  cfg.grpo.validate();
  cfg.reward.weights.validate();
  cfg.reward.length.validate();
  if (cfg.steps < 1) throw std::invalid_argument("training needs steps >= 1");
  if (!(cfg.learning_rate > 0) || !std::isfinite(cfg.learning_rate))
    throw std::invalid_argument("learning rate must be > 0");

  TrainingTrace trace;
  PolicyParams params(task.num_contexts());
  record(trace, params, task, 0, cfg.reward);

  for (int step = 1; step <= cfg.steps; ++step) {
    const PolicyParams old = params;
    std::vector<ToyGroup> groups;
    groups.reserve(static_cast<std::size_t>(task.num_contexts()));
    for (int k = 0; k < task.num_contexts(); ++k)
      groups.push_back(sample_group(old, task, k, cfg.grpo.group_size,
                                    mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(step)),
                                             static_cast<std::uint64_t>(k)),
                                    cfg.reward));

    // The surrogate averages over groups; scaling back by the group count
    // gives every context row the gradient of its own group objective.
    const auto result = surrogate_and_grad(params, old, groups, cfg.grpo);
    params.logits() += cfg.learning_rate * static_cast<double>(groups.size()) * result.gradient;

    if (!params.logits().allFinite()) {
      for (int k = 0; k < params.num_contexts(); ++k)
        if (!params.logits().row(k).allFinite())
          throw std::runtime_error("non-finite logits for context " + std::to_string(k) +
                                   " after step " + std::to_string(step));
    }
    record(trace, params, task, step, cfg.reward);
  }
  trace.final_params = params;
  return trace;
}

void write_trace(const TrainingTrace& trace, std::ostream& out) {
  for (const auto& r : trace.rows)
    out << nlohmann::json{{"step", r.step},
                          {"context", r.context},
                          {"expected_reward", r.expected_reward},
                          {"p_correct", r.p_correct},
                          {"p_dialectic", r.p_dialectic}}
               .dump()
        << '\n';
}

GradCheckResult gradient_check(std::uint64_t seed, int points, double step, int num_contexts,
                               int group_size) {
  const auto task = ToyTask::alternating(num_contexts);
  const ToyRewardConfig reward;
  GrpoConfig cfg;
  cfg.group_size = group_size;

  GradCheckResult out;
  for (int p = 0; p < points; ++p) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(p)));
    LogitMatrix old_logits(num_contexts, kTemplateCount);
    LogitMatrix new_logits(num_contexts, kTemplateCount);
    for (Eigen::Index i = 0; i < old_logits.size(); ++i) old_logits.data()[i] = standard_normal(rng);
    for (Eigen::Index i = 0; i < new_logits.size(); ++i)
      new_logits.data()[i] = old_logits.data()[i] + 0.3 * standard_normal(rng);
    const PolicyParams old(old_logits);
    PolicyParams params(new_logits);

    std::vector<ToyGroup> groups;
    for (int k = 0; k < num_contexts; ++k)
      groups.push_back(sample_group(old, task, k, group_size, rng(), reward));

    out.max_abs_value_at_old =
        std::max(out.max_abs_value_at_old, std::abs(surrogate_and_grad(old, old, groups, cfg).value));

    const auto analytic = surrogate_and_grad(params, old, groups, cfg).gradient;
    for (int k = 0; k < num_contexts; ++k) {
      for (int t = 0; t < kTemplateCount; ++t) {
        const double a = analytic(k, t);
        if (std::abs(a) <= 1e-8) continue;
        const double saved = params.logits()(k, t);
        params.logits()(k, t) = saved + step;
        const double up = surrogate_and_grad(params, old, groups, cfg).value;
        params.logits()(k, t) = saved - step;
        const double down = surrogate_and_grad(params, old, groups, cfg).value;
        params.logits()(k, t) = saved;
        const double fd = (up - down) / (2 * step);
        const double rel = std::abs(a - fd) / std::max(std::abs(a), std::abs(fd));
        out.max_rel_error = std::max(out.max_rel_error, rel);
        ++out.coordinates_checked;
      }
    }
  }
  return out;
}

MonteCarloEstimate monte_carlo_reward(const PolicyParams& params, int context, Verdict truth,
                                      std::size_t samples, std::uint64_t seed,
                                      const ToyRewardConfig& cfg) {
  if (samples < 2) throw std::invalid_argument("Monte Carlo needs at least 2 samples");
  const auto probs = params.probabilities(context);
  MockCritic critic;
  Rng rng(seed);
  double sum = 0, sum_sq = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    // scored from the rendered text, independent of template_totals
    const auto response = render_template(sample_index(probs, rng), context);
    const double r = reward_total(response, truth, critic, cfg.weights, cfg.length).total;
    sum += r;
    sum_sq += r * r;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1));
  return {mean, std::sqrt(var / n)};
}

}  // namespace dialectic
