#include "fastrl/rl/sac.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fastrl/rl/distributions.hpp"
#include "fastrl/rl/polyak.hpp"

namespace fastrl::rl {

template <typename T>
SacAgent<T>::SacAgent(std::size_t obs_dim, std::size_t action_dim, T action_scale, const SacConfig<T>& config,
                      Prng& init_rng, Backend backend)
    : obs_dim_(obs_dim),
      action_dim_(action_dim),
      action_scale_(action_scale),
      config_(config),
      target_entropy_(config.target_entropy.value_or(-static_cast<T>(action_dim))) {
  if (obs_dim == 0 || action_dim == 0) throw std::invalid_argument("SacAgent: dimensions must be positive");
  if (!(action_scale > T(0))) throw std::invalid_argument("SacAgent: action scale must be positive");
  if (config.batch_size == 0) throw std::invalid_argument("SacAgent: batch size must be positive");
  actor_ = nn::Mlp<T>::init({obs_dim, config.actor_hidden, 2 * action_dim, config.activation, Activation::Identity},
                            init_rng, backend);
  for (auto& critic : critics_)
    critic = nn::Mlp<T>::init(
        {obs_dim + action_dim, config.critic_hidden, 1, config.activation, Activation::Identity}, init_rng, backend);
  target_critics_ = critics_;
  actor_opt_ = nn::AdamState<T>(actor_.parameter_count(), config.actor_optimizer);
  for (std::size_t i = 0; i < 2; ++i)
    critic_opt_[i] = nn::AdamState<T>(critics_[i].parameter_count(), config.critic_optimizer);
  log_alpha_ = {static_cast<T>(std::log(static_cast<double>(config.initial_alpha)))};
  alpha_opt_ = nn::AdamState<T>(1, config.alpha_optimizer);
}

template <typename T>
T SacAgent<T>::alpha() const {
  return std::exp(log_alpha_[0]);
}

template <typename T>
void SacAgent<T>::set_backend(Backend b) {
  actor_.set_backend(b);
  for (auto& c : critics_) c.set_backend(b);
  for (auto& c : target_critics_) c.set_backend(b);
}

template <typename T>
void SacAgent<T>::fill_critic_input(ConstMatrixView<T> obs, ConstMatrixView<T> action) {
  const std::size_t batch = obs.rows();
  if (critic_in_.rows() != batch) critic_in_ = Matrix<T>(batch, obs_dim_ + action_dim_);
  for (std::size_t b = 0; b < batch; ++b) {
    T* row = critic_in_.data() + b * (obs_dim_ + action_dim_);
    std::copy_n(obs.data() + b * obs_dim_, obs_dim_, row);
    std::copy_n(action.data() + b * action_dim_, action_dim_, row + obs_dim_);
  }
}

template <typename T>
void SacAgent<T>::split_actor_output(ConstMatrixView<T> out, std::size_t batch) {
  const std::size_t n = batch * action_dim_;
  mean_.resize(n);
  log_std_.resize(n);
  in_range_.resize(n);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t d = 0; d < action_dim_; ++d) {
      const T raw = out(b, action_dim_ + d);
      mean_[b * action_dim_ + d] = out(b, d);
      log_std_[b * action_dim_ + d] = std::clamp(raw, config_.log_std_min, config_.log_std_max);
      in_range_[b * action_dim_ + d] = (raw >= config_.log_std_min && raw <= config_.log_std_max) ? T(1) : T(0);
    }
  }
}

template <typename T>
void SacAgent<T>::act(ConstMatrixView<T> obs, Prng& rng, MatrixView<T> actions) {
  kernels::require(actions.rows() == obs.rows() && actions.cols() == action_dim_, "SacAgent::act: action shape");
  const std::size_t batch = obs.rows();
  split_actor_output(actor_.forward(obs, ws_), batch);
  pre_squash_.resize(batch * action_dim_);
  noise_.resize(batch * action_dim_);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t off = b * action_dim_;
    squashed_gaussian_sample<T>(std::span<const T>(mean_).subspan(off, action_dim_),
                                std::span<const T>(log_std_).subspan(off, action_dim_), action_scale_, rng,
                                actions.row(b), std::span<T>(pre_squash_).subspan(off, action_dim_),
                                std::span<T>(noise_).subspan(off, action_dim_));
  }
}

template <typename T>
void SacAgent<T>::act_deterministic(ConstMatrixView<T> obs, MatrixView<T> actions,
                                    typename nn::Mlp<T>::Workspace& ws) const {
  kernels::require(actions.rows() == obs.rows() && actions.cols() == action_dim_,
                   "SacAgent::act_deterministic: action shape");
  const auto out = actor_.forward(obs, ws);
  for (std::size_t b = 0; b < obs.rows(); ++b)
    for (std::size_t d = 0; d < action_dim_; ++d) actions(b, d) = action_scale_ * std::tanh(out(b, d));
}

template <typename T>
SacLosses SacAgent<T>::update(const TransitionBatch<T>& batch, Prng& rng) {
  const std::size_t n = batch.size();
  if (n == 0) throw std::invalid_argument("SacAgent::update: empty batch");
  kernels::require(batch.obs.cols() == obs_dim_ && batch.action.cols() == action_dim_,
                   "SacAgent::update: batch dimensions do not match the agent");
  const std::size_t a_dim = action_dim_;
  const T inv_n = T(1) / static_cast<T>(n);
  const T alpha = this->alpha();
  SacLosses losses;

  if (action_buf_.rows() != n) action_buf_ = Matrix<T>(n, a_dim);
  pre_squash_.resize(n * a_dim);
  noise_.resize(n * a_dim);
  log_prob_.resize(n);
  target_.resize(n);
  d_q_.resize(n);
  for (auto& q : q_values_) q.resize(n);

  auto sample_rows = [&] {
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t off = b * a_dim;
      log_prob_[b] = squashed_gaussian_sample<T>(
          std::span<const T>(mean_).subspan(off, a_dim), std::span<const T>(log_std_).subspan(off, a_dim),
          action_scale_, rng, action_buf_.view().row(b), std::span<T>(pre_squash_).subspan(off, a_dim),
          std::span<T>(noise_).subspan(off, a_dim));
    }
  };

  // Soft Bellman target from a fresh next-state action.
  split_actor_output(actor_.forward(batch.next_obs, ws_), n);
  sample_rows();
  fill_critic_input(batch.next_obs, action_buf_);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto q = target_critics_[i].forward(critic_in_, ws_);
    std::copy_n(q.data(), n, q_values_[i].begin());
  }
  for (std::size_t b = 0; b < n; ++b) {
    const T soft_value = std::min(q_values_[0][b], q_values_[1][b]) - alpha * log_prob_[b];
    target_[b] = batch.reward[b] + config_.gamma * (T(1) - batch.terminal[b]) * soft_value;
  }

  // Critic regression.
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

  // Actor: minimize alpha * log_pi - min(Q1, Q2) through the reparameterized sample.
  split_actor_output(actor_.forward(batch.obs, true), n);
  sample_rows();
  fill_critic_input(batch.obs, action_buf_);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto q = critics_[i].forward(critic_in_, true);
    std::copy_n(q.data(), n, q_values_[i].begin());
  }
  d_action_.assign(n * a_dim, T(0));
  double actor_loss = 0;
  for (std::size_t i = 0; i < 2; ++i) {
    bool any = false;
    for (std::size_t b = 0; b < n; ++b) {
      const bool chosen = i == 0 ? q_values_[0][b] <= q_values_[1][b] : q_values_[1][b] < q_values_[0][b];
      d_q_[b] = chosen ? -inv_n : T(0);
      any = any || chosen;
    }
    if (!any) continue;
    const auto d_in = critics_[i].backward(ConstMatrixView<T>(d_q_.data(), n, 1));
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t d = 0; d < a_dim; ++d) d_action_[b * a_dim + d] += d_in(b, obs_dim_ + d);
  }
  d_actor_out_.assign(n * 2 * a_dim, T(0));
  for (std::size_t b = 0; b < n; ++b) {
    actor_loss += alpha * log_prob_[b] - std::min(q_values_[0][b], q_values_[1][b]);
    for (std::size_t d = 0; d < a_dim; ++d) {
      const std::size_t k = b * a_dim + d;
      const T t = std::tanh(pre_squash_[k]);
      const T one_minus = T(1) - t * t;
      const T d_squash = T(2) * t * one_minus / (one_minus + T(kSquashEpsilon));
      const T g_u = alpha * inv_n * d_squash + d_action_[k] * action_scale_ * one_minus;
      d_actor_out_[b * 2 * a_dim + d] = g_u;
      d_actor_out_[b * 2 * a_dim + a_dim + d] =
          (-alpha * inv_n + g_u * std::exp(log_std_[k]) * noise_[k]) * in_range_[k];
    }
  }
  losses.actor = actor_loss / static_cast<double>(n);
  actor_.backward(ConstMatrixView<T>(d_actor_out_.data(), n, 2 * a_dim));
  nn::adam_step<T>(actor_.parameters(), actor_.gradients(), actor_opt_);

  // Temperature.
  if (config_.learn_alpha) {
    double mean_term = 0;
    for (std::size_t b = 0; b < n; ++b) mean_term += -log_prob_[b] - target_entropy_;
    mean_term /= static_cast<double>(n);
    losses.alpha = static_cast<double>(log_alpha_[0]) * mean_term;
    const T grad[1] = {static_cast<T>(mean_term)};
    nn::adam_step<T>(log_alpha_, grad, alpha_opt_);
  }

  for (std::size_t i = 0; i < 2; ++i)
    polyak_update<T>(target_critics_[i].parameters(), critics_[i].parameters(), config_.polyak);
  ++updates_;
  return losses;
}

template class SacAgent<float>;
template class SacAgent<double>;

}  // namespace fastrl::rl
