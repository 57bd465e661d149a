#pragma once

// Group-relative advantages and the clipped surrogate objective.
//
//   A_i = (R_i - mean(R)) / (std(R) + delta)          (population std)
//   J   = 1/G sum_i min(rho_i A_i, clip(rho_i, 1-eps, 1+eps) A_i)
//   rho_i = exp(logp_new_i - logp_old_i)
//
// Ratios are sequence level. An optional KL penalty (off by default) subtracts
// kl_coeff * mean(rho - 1 - log rho).

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dialectic/cot_grammar.hpp"

namespace dialectic {

struct GrpoConfig {
  int group_size = 8;
  double clip_eps = 0.2;
  double std_floor = 1e-4;
  double kl_coeff = 0.0;

  void validate() const {
    if (group_size < 2) throw std::invalid_argument("group_size must be >= 2");
    if (!(clip_eps > 0) || !std::isfinite(clip_eps)) throw std::invalid_argument("clip_eps must be > 0");
    if (!(std_floor > 0) || !std::isfinite(std_floor)) throw std::invalid_argument("std_floor must be > 0");
    if (!(kl_coeff >= 0) || !std::isfinite(kl_coeff)) throw std::invalid_argument("kl_coeff must be >= 0");
  }
};

template <typename Scalar>
using Vector = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

/// G responses to one prompt, sampled under the old policy.
struct GroupSample {
  std::string prompt_id;
  std::vector<RawResponse> responses;
  Vector<double> logp_old;  // natural-log sequence probabilities
  Vector<double> rewards;

  Eigen::Index size() const noexcept { return rewards.size(); }

  void validate() const {
    const auto g = static_cast<Eigen::Index>(responses.size());
    if (logp_old.size() != g || rewards.size() != g)
      throw std::invalid_argument("group " + prompt_id + ": responses, logp_old and rewards differ in length");
    if (g < 2) throw std::invalid_argument("group " + prompt_id + ": needs at least 2 responses");
    if (!logp_old.allFinite() || !rewards.allFinite())
      throw std::invalid_argument("group " + prompt_id + ": non-finite logp_old or reward");
  }
};

template <typename Derived>
typename Derived::Scalar population_std(const Eigen::ArrayBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Scalar mean = x.mean();
  return std::sqrt((x - mean).square().mean());
}

/// Standardized rewards. A constant group maps to exact zeros.
template <typename Derived>
Vector<typename Derived::Scalar> compute_advantages(const Eigen::ArrayBase<Derived>& rewards,
                                                    typename Derived::Scalar std_floor) {
  using Scalar = typename Derived::Scalar;
  if (rewards.size() < 2) throw std::invalid_argument("advantages need at least 2 rewards");
  if (!(std_floor > Scalar(0))) throw std::invalid_argument("std_floor must be > 0");
  if (!rewards.allFinite()) throw std::invalid_argument("rewards must be finite");
  if (rewards.maxCoeff() == rewards.minCoeff()) return Vector<Scalar>::Zero(rewards.size());
  const Scalar mean = rewards.mean();
  return (rewards - mean) / (population_std(rewards) + std_floor);
}

template <typename Scalar>
Scalar prob_ratio(Scalar logp_new, Scalar logp_old) {
  if (!std::isfinite(logp_new) || !std::isfinite(logp_old))
    throw std::invalid_argument("log-probabilities must be finite");
  return std::exp(logp_new - logp_old);
}

template <typename Scalar>
Scalar clipped_term(Scalar ratio, Scalar advantage, Scalar clip_eps) {
  const Scalar clipped = std::clamp(ratio, Scalar(1) - clip_eps, Scalar(1) + clip_eps);
  return std::min(ratio * advantage, clipped * advantage);
}

/// d clipped_term / d log(ratio): ratio * advantage while the unclipped branch
/// is the minimum, zero once clipping is active.
template <typename Scalar>
Scalar clipped_term_dlog(Scalar ratio, Scalar advantage, Scalar clip_eps) {
  const Scalar clipped = std::clamp(ratio, Scalar(1) - clip_eps, Scalar(1) + clip_eps);
  return ratio * advantage <= clipped * advantage ? ratio * advantage : Scalar(0);
}

namespace detail {

template <typename Derived>
Vector<double> checked_ratios(const GroupSample& group, const Eigen::ArrayBase<Derived>& logp_new) {
  group.validate();
  if (logp_new.size() != group.size())
    throw std::invalid_argument("group " + group.prompt_id + ": expected " +
                                std::to_string(group.size()) + " new log-probabilities, got " +
                                std::to_string(logp_new.size()));
  Vector<double> ratios(group.size());
  for (Eigen::Index i = 0; i < group.size(); ++i) ratios[i] = prob_ratio<double>(logp_new[i], group.logp_old[i]);
  return ratios;
}

}  // namespace detail

/// Surrogate objective of one group at the new log-probabilities.
template <typename Derived>
double group_objective(const GroupSample& group, const Eigen::ArrayBase<Derived>& logp_new,
                       const GrpoConfig& cfg) {
  const auto ratios = detail::checked_ratios(group, logp_new);
  const auto adv = compute_advantages(group.rewards, cfg.std_floor);
  double sum = 0;
  for (Eigen::Index i = 0; i < group.size(); ++i) sum += clipped_term(ratios[i], adv[i], cfg.clip_eps);
  double objective = sum / static_cast<double>(group.size());
  if (cfg.kl_coeff > 0) objective -= cfg.kl_coeff * (ratios - 1.0 - ratios.log()).mean();
  return objective;
}

/// Gradient of group_objective with respect to each new log-probability,
/// advantages held constant.
template <typename Derived>
Vector<double> group_objective_grad(const GroupSample& group, const Eigen::ArrayBase<Derived>& logp_new,
                                    const GrpoConfig& cfg) {
  const auto ratios = detail::checked_ratios(group, logp_new);
  const auto adv = compute_advantages(group.rewards, cfg.std_floor);
  const double inv_g = 1.0 / static_cast<double>(group.size());
  Vector<double> grad(group.size());
  for (Eigen::Index i = 0; i < group.size(); ++i) {
    grad[i] = clipped_term_dlog(ratios[i], adv[i], cfg.clip_eps) * inv_g;
    if (cfg.kl_coeff > 0) grad[i] -= cfg.kl_coeff * (ratios[i] - 1.0) * inv_g;
  }
  return grad;
}

}  // namespace dialectic
