#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "fastrl/core/kernels.hpp"
#include "fastrl/core/prng.hpp"
#include "fastrl/nn/adam.hpp"
#include "fastrl/nn/mlp.hpp"
#include "fastrl/rl/replay_buffer.hpp"

namespace fastrl::rl {

template <typename T>
struct SacConfig {
  std::vector<std::size_t> actor_hidden{64, 64};
  std::vector<std::size_t> critic_hidden{64, 64};
  Activation activation = Activation::ReLU;
  std::size_t batch_size = 100;
  T gamma = T(0.99);
  T polyak = T(0.99);
  T initial_alpha = T(0.5);
  bool learn_alpha = true;
  std::optional<T> target_entropy;  // defaults to -action_dim
  T log_std_min = T(-20);
  T log_std_max = T(2);
  nn::AdamConfig<T> actor_optimizer{};
  nn::AdamConfig<T> critic_optimizer{};
  nn::AdamConfig<T> alpha_optimizer{};
};

struct SacLosses {
  double critic1 = 0;
  double critic2 = 0;
  double actor = 0;
  double alpha = 0;
};

/// Soft actor-critic with twin critics, polyak-averaged target critics and a
/// learned temperature.
///
/// The actor maps observations to [mean, log_std] of a Gaussian over the
/// pre-squash action u; actions are scale * tanh(u). log_std is clamped to
/// [log_std_min, log_std_max] and receives no gradient where clamped.
template <typename T>
class SacAgent {
 public:
  SacAgent(std::size_t obs_dim, std::size_t action_dim, T action_scale, const SacConfig<T>& config, Prng& init_rng,
           Backend backend = Backend::Fused);

  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t action_dim() const { return action_dim_; }
  T action_scale() const { return action_scale_; }
  const SacConfig<T>& config() const { return config_; }
  T target_entropy() const { return target_entropy_; }

  /// Stochastic actions for a batch of observations.
  void act(ConstMatrixView<T> obs, Prng& rng, MatrixView<T> actions);
  /// scale * tanh(mean). Does not modify the agent.
  void act_deterministic(ConstMatrixView<T> obs, MatrixView<T> actions, typename nn::Mlp<T>::Workspace& ws) const;

  SacLosses update(const TransitionBatch<T>& batch, Prng& rng);

  T alpha() const;
  T log_alpha() const { return log_alpha_[0]; }
  const nn::Mlp<T>& actor() const { return actor_; }
  nn::Mlp<T>& actor() { return actor_; }
  const nn::Mlp<T>& critic(std::size_t i) const { return critics_.at(i); }
  nn::Mlp<T>& critic(std::size_t i) { return critics_.at(i); }
  const nn::Mlp<T>& target_critic(std::size_t i) const { return target_critics_.at(i); }
  nn::Mlp<T>& target_critic(std::size_t i) { return target_critics_.at(i); }
  std::uint64_t updates() const { return updates_; }

  void set_backend(Backend b);

 private:
  void fill_critic_input(ConstMatrixView<T> obs, ConstMatrixView<T> action);
  // Fills mean_, clamped log_std_, and in_range_ (1 where the raw log_std was
  // inside the clamp range, 0 otherwise).
  void split_actor_output(ConstMatrixView<T> out, std::size_t batch);

  std::size_t obs_dim_;
  std::size_t action_dim_;
  T action_scale_;
  SacConfig<T> config_;
  T target_entropy_;

  nn::Mlp<T> actor_;
  std::array<nn::Mlp<T>, 2> critics_;
  std::array<nn::Mlp<T>, 2> target_critics_;
  nn::AdamState<T> actor_opt_;
  std::array<nn::AdamState<T>, 2> critic_opt_;
  std::vector<T> log_alpha_;
  nn::AdamState<T> alpha_opt_;
  std::uint64_t updates_ = 0;

  // Scratch reused across updates.
  Matrix<T> critic_in_{1, 1};
  std::vector<T> mean_, log_std_, in_range_, pre_squash_, noise_, sampled_action_, log_prob_, target_;
  Matrix<T> action_buf_{1, 1};
  std::vector<T> d_actor_out_;
  std::vector<T> d_q_;
  std::array<std::vector<T>, 2> q_values_;
  std::vector<T> d_action_;
  typename nn::Mlp<T>::Workspace ws_;
};

extern template class SacAgent<float>;
extern template class SacAgent<double>;

}  // namespace fastrl::rl
