#include "fastrl/rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fastrl/rl/distributions.hpp"
#include "fastrl/rl/gae.hpp"

namespace fastrl::rl {

template <typename T>
PpoAgent<T>::PpoAgent(std::size_t obs_dim, std::size_t action_dim, const PpoConfig<T>& config, Prng& init_rng,
                      Backend backend)
    : obs_dim_(obs_dim), action_dim_(action_dim), config_(config) {
  if (obs_dim == 0 || action_dim == 0) throw std::invalid_argument("PpoAgent: dimensions must be positive");
  if (config.batch_size == 0 || config.epochs == 0) throw std::invalid_argument("PpoAgent: batch size and epochs must be positive");
  actor_ = nn::Mlp<T>::init({obs_dim, config.actor_hidden, action_dim, config.activation, Activation::Identity},
                            init_rng, backend);
  critic_ = nn::Mlp<T>::init({obs_dim, config.critic_hidden, 1, config.activation, Activation::Identity}, init_rng,
                             backend);
  log_std_.assign(action_dim, config.initial_log_std);
  log_std_grad_.assign(action_dim, T(0));
  actor_opt_ = nn::AdamState<T>(actor_.parameter_count(), config.actor_optimizer);
  log_std_opt_ = nn::AdamState<T>(action_dim, config.actor_optimizer);
  critic_opt_ = nn::AdamState<T>(critic_.parameter_count(), config.critic_optimizer);
}

template <typename T>
void PpoAgent<T>::set_backend(Backend b) {
  actor_.set_backend(b);
  critic_.set_backend(b);
}

template <typename T>
void PpoAgent<T>::act(ConstMatrixView<T> obs, Prng& rng, MatrixView<T> actions, std::span<T> log_probs,
                      std::span<T> values) {
  const std::size_t n = obs.rows();
  kernels::require(actions.rows() == n && actions.cols() == action_dim_ && log_probs.size() == n,
                   "PpoAgent::act: output shape");
  const auto mean = actor_.forward(obs, ws_);
  for (std::size_t b = 0; b < n; ++b) {
    T lp = T(0);
    for (std::size_t d = 0; d < action_dim_; ++d) {
      const T eps = rng.gaussian<T>();
      actions(b, d) = mean(b, d) + std::exp(log_std_[d]) * eps;
      lp += T(-0.5) * eps * eps - log_std_[d] - T(kHalfLogTwoPi);
    }
    log_probs[b] = lp;
  }
  value(obs, values);
}

template <typename T>
void PpoAgent<T>::value(ConstMatrixView<T> obs, std::span<T> values) {
  kernels::require(values.size() == obs.rows(), "PpoAgent::value: output size");
  const auto v = critic_.forward(obs, ws_);
  std::copy_n(v.data(), obs.rows(), values.begin());
}

template <typename T>
void PpoAgent<T>::act_deterministic(ConstMatrixView<T> obs, MatrixView<T> actions,
                                    typename nn::Mlp<T>::Workspace& ws) const {
  kernels::require(actions.rows() == obs.rows() && actions.cols() == action_dim_,
                   "PpoAgent::act_deterministic: action shape");
  const auto mean = actor_.forward(obs, ws);
  std::copy_n(mean.data(), obs.rows() * action_dim_, actions.data());
}

template <typename T>
double PpoAgent<T>::actor_loss_and_gradient(ConstMatrixView<T> obs, ConstMatrixView<T> actions,
                                            std::span<const T> old_log_probs, std::span<const T> advantages,
                                            double* clip_fraction) {
  const std::size_t n = obs.rows();
  kernels::require(actions.rows() == n && actions.cols() == action_dim_ && old_log_probs.size() == n &&
                       advantages.size() == n,
                   "PpoAgent::actor_loss_and_gradient: minibatch shape");
  const T inv_n = T(1) / static_cast<T>(n);
  const auto mean = actor_.forward(obs, true);
  d_mean_.assign(n * action_dim_, T(0));
  std::fill(log_std_grad_.begin(), log_std_grad_.end(), T(0));
  double objective = 0;
  std::size_t clipped = 0;
  for (std::size_t b = 0; b < n; ++b) {
    T lp = T(0);
    for (std::size_t d = 0; d < action_dim_; ++d) lp += gaussian_log_density(actions(b, d), mean(b, d), log_std_[d]);
    const auto term = clipped_surrogate(lp, old_log_probs[b], advantages[b], config_.clip);
    objective += term.objective;
    clipped += term.clipped ? 1 : 0;
    // loss = -mean(objective): dL/dlogp = -d_objective / n
    const T g = -term.d_objective * inv_n;
    if (g == T(0)) continue;
    for (std::size_t d = 0; d < action_dim_; ++d) {
      const T inv_var = std::exp(T(-2) * log_std_[d]);
      const T diff = actions(b, d) - mean(b, d);
      d_mean_[b * action_dim_ + d] = g * diff * inv_var;
      log_std_grad_[d] += g * (diff * diff * inv_var - T(1));
    }
  }
  const T entropy = diagonal_gaussian_entropy<T>(log_std_);
  for (auto& gl : log_std_grad_) gl -= config_.entropy_coef;
  actor_.backward(ConstMatrixView<T>(d_mean_.data(), n, action_dim_));
  if (clip_fraction) *clip_fraction = static_cast<double>(clipped) / static_cast<double>(n);
  return -objective / static_cast<double>(n) - static_cast<double>(config_.entropy_coef) * entropy;
}

template <typename T>
double PpoAgent<T>::critic_loss_and_gradient(ConstMatrixView<T> obs, std::span<const T> return_targets) {
  const std::size_t n = obs.rows();
  kernels::require(return_targets.size() == n, "PpoAgent::critic_loss_and_gradient: target size");
  const T scale = config_.value_coef * T(2) / static_cast<T>(n);
  const auto v = critic_.forward(obs, true);
  d_value_.resize(n);
  double loss = 0;
  for (std::size_t b = 0; b < n; ++b) {
    const T err = v(b, 0) - return_targets[b];
    loss += static_cast<double>(err) * err;
    d_value_[b] = scale * err;
  }
  critic_.backward(ConstMatrixView<T>(d_value_.data(), n, 1));
  return static_cast<double>(config_.value_coef) * loss / static_cast<double>(n);
}

template <typename T>
PpoLosses PpoAgent<T>::update(const RolloutBuffer<T>& rollout, Prng& rng) {
  if (!rollout.finalized()) throw std::logic_error("PpoAgent::update: rollout advantages not computed");
  kernels::require(rollout.obs_dim() == obs_dim_ && rollout.action_dim() == action_dim_,
                   "PpoAgent::update: rollout dimensions do not match the agent");
  const std::size_t total = rollout.size();
  const auto obs = rollout.obs();
  const auto actions = rollout.actions();
  const auto log_probs = rollout.log_probs();
  const auto advantages = rollout.advantages();
  const auto returns = rollout.returns();
  PpoLosses losses;
  order_.resize(total);
  for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
    for (std::size_t i = 0; i < total; ++i) order_[i] = i;
    for (std::size_t i = total - 1; i > 0; --i) std::swap(order_[i], order_[rng.below(i + 1)]);
    for (std::size_t start = 0; start < total; start += config_.batch_size) {
      const std::size_t n = std::min(config_.batch_size, total - start);
      if (mb_obs_.rows() != n) {
        mb_obs_ = Matrix<T>(n, obs_dim_);
        mb_actions_ = Matrix<T>(n, action_dim_);
      }
      mb_log_probs_.resize(n);
      mb_adv_.resize(n);
      mb_returns_.resize(n);
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t k = order_[start + j];
        std::copy_n(obs.data() + k * obs_dim_, obs_dim_, mb_obs_.data() + j * obs_dim_);
        std::copy_n(actions.data() + k * action_dim_, action_dim_, mb_actions_.data() + j * action_dim_);
        mb_log_probs_[j] = log_probs[k];
        mb_adv_[j] = advantages[k];
        mb_returns_[j] = returns[k];
      }
      if (config_.normalize_advantage && n >= 2) advantage_normalize<T>(mb_adv_);

      double clip_fraction = 0;
      losses.actor += actor_loss_and_gradient(mb_obs_, mb_actions_, mb_log_probs_, mb_adv_, &clip_fraction);
      losses.clip_fraction += clip_fraction;
      nn::adam_step<T>(actor_.parameters(), actor_.gradients(), actor_opt_);
      nn::adam_step<T>(log_std_, log_std_grad_, log_std_opt_);

      losses.critic += critic_loss_and_gradient(mb_obs_, mb_returns_);
      nn::adam_step<T>(critic_.parameters(), critic_.gradients(), critic_opt_);
      ++losses.minibatches;
    }
  }
  const double m = static_cast<double>(losses.minibatches);
  losses.actor /= m;
  losses.critic /= m;
  losses.clip_fraction /= m;
  losses.entropy = diagonal_gaussian_entropy<T>(log_std_);
  ++updates_;
  return losses;
}

template class PpoAgent<float>;
template class PpoAgent<double>;

}  // namespace fastrl::rl
