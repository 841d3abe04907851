#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fastrl/core/kernels.hpp"
#include "fastrl/core/prng.hpp"
#include "fastrl/nn/adam.hpp"
#include "fastrl/nn/mlp.hpp"
#include "fastrl/rl/rollout_buffer.hpp"

namespace fastrl::rl {

template <typename T>
struct PpoConfig {
  std::vector<std::size_t> actor_hidden{64, 64};
  std::vector<std::size_t> critic_hidden{64, 64};
  Activation activation = Activation::ReLU;
  std::size_t num_envs = 4;
  std::size_t steps_per_env = 1024;
  std::size_t epochs = 2;
  std::size_t batch_size = 256;
  T gamma = T(0.9);
  T lambda = T(0.95);
  T clip = T(0.2);
  T entropy_coef = T(0);
  T value_coef = T(0.5);
  bool normalize_advantage = true;
  T initial_log_std = T(0);
  nn::AdamConfig<T> actor_optimizer{};
  nn::AdamConfig<T> critic_optimizer{};
};

struct PpoLosses {
  double actor = 0;
  double critic = 0;
  double entropy = 0;
  double clip_fraction = 0;
  std::size_t minibatches = 0;
};

template <typename T>
struct SurrogateTerm {
  T objective;     // min(rho * A, clip(rho, 1 - eps, 1 + eps) * A)
  T d_objective;   // derivative of `objective` w.r.t. the new log-probability
  bool clipped;    // the clipped branch is active (zero gradient)
};

/// Per-sample clipped surrogate; rho = exp(log_prob_new - log_prob_old).
template <typename T>
SurrogateTerm<T> clipped_surrogate(T log_prob_new, T log_prob_old, T advantage, T clip) {
  const T rho = std::exp(log_prob_new - log_prob_old);
  const T unclipped = rho * advantage;
  const T clipped = std::clamp(rho, T(1) - clip, T(1) + clip) * advantage;
  if (unclipped <= clipped) return {unclipped, unclipped, false};
  return {clipped, T(0), true};
}

/// Proximal policy optimization with a Gaussian policy: the actor outputs the
/// mean, log_std is a state-independent parameter vector. Actions are not
/// squashed; the environment clips them.
template <typename T>
class PpoAgent {
 public:
  PpoAgent(std::size_t obs_dim, std::size_t action_dim, const PpoConfig<T>& config, Prng& init_rng,
           Backend backend = Backend::Fused);

  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t action_dim() const { return action_dim_; }
  const PpoConfig<T>& config() const { return config_; }

  /// Samples actions and returns their log-probabilities and critic values.
  void act(ConstMatrixView<T> obs, Prng& rng, MatrixView<T> actions, std::span<T> log_probs, std::span<T> values);
  void value(ConstMatrixView<T> obs, std::span<T> values);
  /// Distribution mean.
  void act_deterministic(ConstMatrixView<T> obs, MatrixView<T> actions, typename nn::Mlp<T>::Workspace& ws) const;

  /// `epochs` passes of shuffled minibatches over a finalized rollout.
  PpoLosses update(const RolloutBuffer<T>& rollout, Prng& rng);

  /// Clipped-surrogate loss (minus entropy bonus) on one minibatch, with
  /// gradients left in actor().gradients() and log_std_gradients().
  /// Advantages are used as given.
  double actor_loss_and_gradient(ConstMatrixView<T> obs, ConstMatrixView<T> actions, std::span<const T> old_log_probs,
                                 std::span<const T> advantages, double* clip_fraction = nullptr);
  /// value_coef * mean squared error; gradients in critic().gradients().
  double critic_loss_and_gradient(ConstMatrixView<T> obs, std::span<const T> return_targets);

  const nn::Mlp<T>& actor() const { return actor_; }
  nn::Mlp<T>& actor() { return actor_; }
  const nn::Mlp<T>& critic() const { return critic_; }
  nn::Mlp<T>& critic() { return critic_; }
  std::span<const T> log_std() const { return log_std_; }
  std::span<T> log_std() { return log_std_; }
  std::span<const T> log_std_gradients() const { return log_std_grad_; }
  std::uint64_t updates() const { return updates_; }

  void set_backend(Backend b);

 private:
  std::size_t obs_dim_;
  std::size_t action_dim_;
  PpoConfig<T> config_;

  nn::Mlp<T> actor_;
  nn::Mlp<T> critic_;
  std::vector<T> log_std_;
  std::vector<T> log_std_grad_;
  nn::AdamState<T> actor_opt_;
  nn::AdamState<T> log_std_opt_;
  nn::AdamState<T> critic_opt_;
  std::uint64_t updates_ = 0;

  std::vector<std::size_t> order_;
  Matrix<T> mb_obs_{1, 1};
  Matrix<T> mb_actions_{1, 1};
  std::vector<T> mb_log_probs_, mb_adv_, mb_returns_, d_mean_, d_value_;
  typename nn::Mlp<T>::Workspace ws_;
};

extern template class PpoAgent<float>;
extern template class PpoAgent<double>;

}  // namespace fastrl::rl
