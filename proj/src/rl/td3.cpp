#include "fastrl/rl/td3.hpp"

#include <algorithm>
#include <stdexcept>

#include "fastrl/rl/polyak.hpp"

namespace fastrl::rl {

template <typename T>
Td3Agent<T>::Td3Agent(std::size_t obs_dim, std::size_t action_dim, T action_scale, const Td3Config<T>& config,
                      Prng& init_rng, Backend backend)
    : obs_dim_(obs_dim), action_dim_(action_dim), action_scale_(action_scale), config_(config) {
  if (obs_dim == 0 || action_dim == 0) throw std::invalid_argument("Td3Agent: dimensions must be positive");
  if (!(action_scale > T(0))) throw std::invalid_argument("Td3Agent: action scale must be positive");
  if (config.policy_delay == 0) throw std::invalid_argument("Td3Agent: policy delay must be positive");
  actor_ = nn::Mlp<T>::init({obs_dim, config.actor_hidden, action_dim, config.activation, Activation::Tanh},
                            init_rng, backend);
  for (auto& critic : critics_)
    critic = nn::Mlp<T>::init(
        {obs_dim + action_dim, config.critic_hidden, 1, config.activation, Activation::Identity}, init_rng, backend);
  target_actor_ = actor_;
  target_critics_ = critics_;
  actor_opt_ = nn::AdamState<T>(actor_.parameter_count(), config.actor_optimizer);
  for (std::size_t i = 0; i < 2; ++i)
    critic_opt_[i] = nn::AdamState<T>(critics_[i].parameter_count(), config.critic_optimizer);
}

template <typename T>
void Td3Agent<T>::set_backend(Backend b) {
  actor_.set_backend(b);
  target_actor_.set_backend(b);
  for (auto& c : critics_) c.set_backend(b);
  for (auto& c : target_critics_) c.set_backend(b);
}

template <typename T>
void Td3Agent<T>::fill_critic_input(ConstMatrixView<T> obs, ConstMatrixView<T> action) {
  const std::size_t batch = obs.rows();
  if (critic_in_.rows() != batch) critic_in_ = Matrix<T>(batch, obs_dim_ + action_dim_);
  for (std::size_t b = 0; b < batch; ++b) {
    T* row = critic_in_.data() + b * (obs_dim_ + action_dim_);
    std::copy_n(obs.data() + b * obs_dim_, obs_dim_, row);
    std::copy_n(action.data() + b * action_dim_, action_dim_, row + obs_dim_);
  }
}

template <typename T>
void Td3Agent<T>::act(ConstMatrixView<T> obs, Prng& rng, MatrixView<T> actions) {
  kernels::require(actions.rows() == obs.rows() && actions.cols() == action_dim_, "Td3Agent::act: action shape");
  const auto out = actor_.forward(obs, ws_);
  const T sigma = config_.exploration_noise * action_scale_;
  for (std::size_t b = 0; b < obs.rows(); ++b)
    for (std::size_t d = 0; d < action_dim_; ++d)
      actions(b, d) = std::clamp(action_scale_ * out(b, d) + sigma * rng.gaussian<T>(), -action_scale_, action_scale_);
}

template <typename T>
void Td3Agent<T>::act_deterministic(ConstMatrixView<T> obs, MatrixView<T> actions,
                                    typename nn::Mlp<T>::Workspace& ws) const {
  kernels::require(actions.rows() == obs.rows() && actions.cols() == action_dim_,
                   "Td3Agent::act_deterministic: action shape");
  const auto out = actor_.forward(obs, ws);
  for (std::size_t b = 0; b < obs.rows(); ++b)
    for (std::size_t d = 0; d < action_dim_; ++d) actions(b, d) = action_scale_ * out(b, d);
}

template <typename T>
void Td3Agent<T>::target_action(ConstMatrixView<T> next_obs, Prng& rng, MatrixView<T> actions) {
  kernels::require(actions.rows() == next_obs.rows() && actions.cols() == action_dim_,
                   "Td3Agent::target_action: action shape");
  const auto out = target_actor_.forward(next_obs, ws_);
  const T sigma = config_.target_noise * action_scale_;
  const T noise_clip = config_.target_noise_clip * action_scale_;
  for (std::size_t b = 0; b < next_obs.rows(); ++b)
    for (std::size_t d = 0; d < action_dim_; ++d) {
      const T noise = std::clamp(sigma * rng.gaussian<T>(), -noise_clip, noise_clip);
      actions(b, d) = std::clamp(action_scale_ * out(b, d) + noise, -action_scale_, action_scale_);
    }
}

template <typename T>
Td3Losses Td3Agent<T>::update(const TransitionBatch<T>& batch, std::uint64_t update_index, Prng& rng) {
  const std::size_t n = batch.size();
  if (n == 0) throw std::invalid_argument("Td3Agent::update: empty batch");
  kernels::require(batch.obs.cols() == obs_dim_ && batch.action.cols() == action_dim_,
                   "Td3Agent::update: batch dimensions do not match the agent");
  const T inv_n = T(1) / static_cast<T>(n);
  Td3Losses losses;

  if (action_buf_.rows() != n) action_buf_ = Matrix<T>(n, action_dim_);
  target_.resize(n);
  d_q_.resize(n);
  for (auto& q : q_values_) q.resize(n);

  target_action(batch.next_obs, rng, action_buf_);
  fill_critic_input(batch.next_obs, action_buf_);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto q = target_critics_[i].forward(critic_in_, ws_);
    std::copy_n(q.data(), n, q_values_[i].begin());
  }
  for (std::size_t b = 0; b < n; ++b)
    target_[b] = batch.reward[b] +
                 config_.gamma * (T(1) - batch.terminal[b]) * std::min(q_values_[0][b], q_values_[1][b]);

  fill_critic_input(batch.obs, batch.action);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto q = critics_[i].forward(critic_in_, true);
    double loss = 0;
    for (std::size_t b = 0; b < n; ++b) {
      const T err = q(b, 0) - target_[b];
      loss += static_cast<double>(err) * err;
      d_q_[b] = T(2) * err * inv_n;
    }
    (i == 0 ? losses.critic1 : losses.critic2) = loss / static_cast<double>(n);
    critics_[i].backward(ConstMatrixView<T>(d_q_.data(), n, 1));
    nn::adam_step<T>(critics_[i].parameters(), critics_[i].gradients(), critic_opt_[i]);
  }

  if (update_index % config_.policy_delay == 0) {
    const auto out = actor_.forward(batch.obs, true);
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t d = 0; d < action_dim_; ++d) action_buf_(b, d) = action_scale_ * out(b, d);
    fill_critic_input(batch.obs, action_buf_);
    const auto q = critics_[0].forward(critic_in_, true);
    double actor_loss = 0;
    for (std::size_t b = 0; b < n; ++b) {
      actor_loss -= q(b, 0);
      d_q_[b] = -inv_n;
    }
    losses.actor = actor_loss / static_cast<double>(n);
    const auto d_in = critics_[0].backward(ConstMatrixView<T>(d_q_.data(), n, 1));
    d_actor_out_.resize(n * action_dim_);
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t d = 0; d < action_dim_; ++d)
        d_actor_out_[b * action_dim_ + d] = d_in(b, obs_dim_ + d) * action_scale_;
    actor_.backward(ConstMatrixView<T>(d_actor_out_.data(), n, action_dim_));
    nn::adam_step<T>(actor_.parameters(), actor_.gradients(), actor_opt_);
    losses.actor_updated = true;

    polyak_update<T>(target_actor_.parameters(), actor_.parameters(), config_.polyak);
    for (std::size_t i = 0; i < 2; ++i)
      polyak_update<T>(target_critics_[i].parameters(), critics_[i].parameters(), config_.polyak);
  }
  ++updates_;
  return losses;
}

template class Td3Agent<float>;
template class Td3Agent<double>;

}  // namespace fastrl::rl
