#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "fastrl/core/matrix.hpp"
#include "fastrl/rl/gae.hpp"

namespace fastrl::rl {

/// On-policy storage for `num_envs` parallel environments x `steps` steps.
/// Sample (env, t) lives at flat index env * steps + t so each environment's
/// trajectory is contiguous for GAE.
template <typename T>
class RolloutBuffer {
 public:
  RolloutBuffer(std::size_t num_envs, std::size_t steps, std::size_t obs_dim, std::size_t action_dim)
      : num_envs_(num_envs), steps_(steps), obs_dim_(obs_dim), action_dim_(action_dim) {
    if (num_envs == 0 || steps == 0 || obs_dim == 0 || action_dim == 0)
      throw std::invalid_argument("RolloutBuffer: dimensions must be positive");
    const std::size_t n = num_envs * steps;
    obs_.assign(n * obs_dim, T(0));
    actions_.assign(n * action_dim, T(0));
    log_probs_.assign(n, T(0));
    values_.assign(n, T(0));
    rewards_.assign(n, T(0));
    truncation_values_.assign(n, T(0));
    step_end_.assign(n, StepEnd::None);
    bootstrap_.assign(num_envs, T(0));
    advantages_.assign(n, T(0));
    returns_.assign(n, T(0));
  }

  std::size_t num_envs() const { return num_envs_; }
  std::size_t steps() const { return steps_; }
  std::size_t size() const { return num_envs_ * steps_; }
  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t action_dim() const { return action_dim_; }

  void store(std::size_t env, std::size_t t, std::span<const T> obs, std::span<const T> action, T log_prob, T value,
             T reward, StepEnd end, T truncation_value = T(0)) {
    if (finalized_) throw std::logic_error("RolloutBuffer::store: rollout already finalized; call clear()");
    if (env >= num_envs_ || t >= steps_) throw std::out_of_range("RolloutBuffer::store");
    if (obs.size() != obs_dim_ || action.size() != action_dim_)
      throw std::invalid_argument("RolloutBuffer::store: dimension mismatch");
    const std::size_t i = env * steps_ + t;
    std::copy(obs.begin(), obs.end(), obs_.begin() + i * obs_dim_);
    std::copy(action.begin(), action.end(), actions_.begin() + i * action_dim_);
    log_probs_[i] = log_prob;
    values_[i] = value;
    rewards_[i] = reward;
    step_end_[i] = end;
    truncation_values_[i] = truncation_value;
  }

  /// Critic value of the observation following each environment's last step.
  void set_bootstrap(std::size_t env, T value) { bootstrap_.at(env) = value; }

  /// Computes advantages and return targets. Valid exactly once per rollout.
  void finalize(T gamma, T lambda) {
    if (finalized_) throw std::logic_error("RolloutBuffer::finalize: advantages already computed");
    for (std::size_t e = 0; e < num_envs_; ++e) {
      const std::size_t off = e * steps_;
      gae_compute<T>(std::span<const T>(rewards_).subspan(off, steps_), std::span<const T>(values_).subspan(off, steps_),
                     bootstrap_[e], std::span<const StepEnd>(step_end_).subspan(off, steps_),
                     std::span<const T>(truncation_values_).subspan(off, steps_), gamma, lambda,
                     std::span<T>(advantages_).subspan(off, steps_), std::span<T>(returns_).subspan(off, steps_));
    }
    finalized_ = true;
  }

  bool finalized() const { return finalized_; }
  void clear() { finalized_ = false; }

  ConstMatrixView<T> obs() const { return {obs_.data(), size(), obs_dim_}; }
  ConstMatrixView<T> actions() const { return {actions_.data(), size(), action_dim_}; }
  std::span<const T> log_probs() const { return log_probs_; }
  std::span<const T> values() const { return values_; }
  std::span<const T> rewards() const { return rewards_; }
  std::span<const StepEnd> step_ends() const { return step_end_; }
  std::span<const T> advantages() const { return advantages_; }
  std::span<const T> returns() const { return returns_; }

 private:
  std::size_t num_envs_;
  std::size_t steps_;
  std::size_t obs_dim_;
  std::size_t action_dim_;
  std::vector<T> obs_;
  std::vector<T> actions_;
  std::vector<T> log_probs_;
  std::vector<T> values_;
  std::vector<T> rewards_;
  std::vector<T> truncation_values_;
  std::vector<StepEnd> step_end_;
  std::vector<T> bootstrap_;
  std::vector<T> advantages_;
  std::vector<T> returns_;
  bool finalized_ = false;
};

}  // namespace fastrl::rl
