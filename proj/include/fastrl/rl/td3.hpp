#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "fastrl/core/kernels.hpp"
#include "fastrl/core/prng.hpp"
#include "fastrl/nn/adam.hpp"
#include "fastrl/nn/mlp.hpp"
#include "fastrl/rl/replay_buffer.hpp"

namespace fastrl::rl {

/// Noise standard deviations and the smoothing clip are fractions of the
/// action scale.
template <typename T>
struct Td3Config {
  std::vector<std::size_t> actor_hidden{64, 64};
  std::vector<std::size_t> critic_hidden{64, 64};
  Activation activation = Activation::ReLU;
  std::size_t batch_size = 100;
  T gamma = T(0.99);
  T polyak = T(0.99);
  T exploration_noise = T(0.1);
  T target_noise = T(0.2);
  T target_noise_clip = T(0.5);
  std::size_t policy_delay = 2;
  nn::AdamConfig<T> actor_optimizer{};
  nn::AdamConfig<T> critic_optimizer{};
};

struct Td3Losses {
  double critic1 = 0;
  double critic2 = 0;
  double actor = 0;
  bool actor_updated = false;
};

/// Twin-delayed deterministic policy gradient. The actor ends in Tanh and
/// its output is multiplied by the action scale.
template <typename T>
class Td3Agent {
 public:
  Td3Agent(std::size_t obs_dim, std::size_t action_dim, T action_scale, const Td3Config<T>& config, Prng& init_rng,
           Backend backend = Backend::Fused);

  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t action_dim() const { return action_dim_; }
  T action_scale() const { return action_scale_; }
  const Td3Config<T>& config() const { return config_; }

  /// Actor output plus clipped Gaussian exploration noise.
  void act(ConstMatrixView<T> obs, Prng& rng, MatrixView<T> actions);
  void act_deterministic(ConstMatrixView<T> obs, MatrixView<T> actions, typename nn::Mlp<T>::Workspace& ws) const;

  /// Critics are always updated; the actor and all targets only when
  /// update_index % policy_delay == 0.
  Td3Losses update(const TransitionBatch<T>& batch, std::uint64_t update_index, Prng& rng);
  /// Uses the internal update counter as update_index.
  Td3Losses update(const TransitionBatch<T>& batch, Prng& rng) { return update(batch, updates_, rng); }

  /// Smoothed target action for next_obs, written to `actions`.
  void target_action(ConstMatrixView<T> next_obs, Prng& rng, MatrixView<T> actions);

  const nn::Mlp<T>& actor() const { return actor_; }
  nn::Mlp<T>& actor() { return actor_; }
  const nn::Mlp<T>& target_actor() const { return target_actor_; }
  const nn::Mlp<T>& critic(std::size_t i) const { return critics_.at(i); }
  nn::Mlp<T>& critic(std::size_t i) { return critics_.at(i); }
  const nn::Mlp<T>& target_critic(std::size_t i) const { return target_critics_.at(i); }
  std::uint64_t updates() const { return updates_; }

  void set_backend(Backend b);

 private:
  void fill_critic_input(ConstMatrixView<T> obs, ConstMatrixView<T> action);

  std::size_t obs_dim_;
  std::size_t action_dim_;
  T action_scale_;
  Td3Config<T> config_;

  nn::Mlp<T> actor_;
  nn::Mlp<T> target_actor_;
  std::array<nn::Mlp<T>, 2> critics_;
  std::array<nn::Mlp<T>, 2> target_critics_;
  nn::AdamState<T> actor_opt_;
  std::array<nn::AdamState<T>, 2> critic_opt_;
  std::uint64_t updates_ = 0;

  Matrix<T> critic_in_{1, 1};
  Matrix<T> action_buf_{1, 1};
  std::vector<T> target_, d_q_, d_actor_out_;
  std::array<std::vector<T>, 2> q_values_;
  typename nn::Mlp<T>::Workspace ws_;
};

extern template class Td3Agent<float>;
extern template class Td3Agent<double>;

}  // namespace fastrl::rl
