#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "fastrl/core/matrix.hpp"
#include "fastrl/core/prng.hpp"

namespace fastrl::rl {

/// One environment interaction. `terminal` marks true termination only;
/// time-limit truncation is not stored as terminal.
template <typename T>
struct Transition {
  std::vector<T> obs;
  std::vector<T> action;
  T reward = T(0);
  std::vector<T> next_obs;
  bool terminal = false;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Column-stacked minibatch of transitions.
template <typename T>
struct TransitionBatch {
  TransitionBatch() = default;
  TransitionBatch(std::size_t batch, std::size_t obs_dim, std::size_t action_dim)
      : obs(batch, obs_dim), action(batch, action_dim), next_obs(batch, obs_dim), reward(batch), terminal(batch) {}

  std::size_t size() const { return reward.size(); }

  Matrix<T> obs{1, 1};
  Matrix<T> action{1, 1};
  Matrix<T> next_obs{1, 1};
  std::vector<T> reward;
  std::vector<T> terminal;  // 1 or 0
};

/// Fixed-capacity ring of transitions; the oldest entry is overwritten first.
template <typename T>
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t action_dim)
      : capacity_(capacity), obs_dim_(obs_dim), action_dim_(action_dim) {
    if (capacity == 0 || obs_dim == 0 || action_dim == 0)
      throw std::invalid_argument("ReplayBuffer: capacity and dimensions must be positive");
    obs_.resize(capacity * obs_dim);
    next_obs_.resize(capacity * obs_dim);
    action_.resize(capacity * action_dim);
    reward_.resize(capacity);
    terminal_.resize(capacity);
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t action_dim() const { return action_dim_; }

  void push(std::span<const T> obs, std::span<const T> action, T reward, std::span<const T> next_obs, bool terminal) {
    if (obs.size() != obs_dim_ || next_obs.size() != obs_dim_ || action.size() != action_dim_)
      throw std::invalid_argument("ReplayBuffer::push: transition dimensions do not match the buffer");
    const std::size_t slot = cursor_;
    std::copy(obs.begin(), obs.end(), obs_.begin() + slot * obs_dim_);
    std::copy(next_obs.begin(), next_obs.end(), next_obs_.begin() + slot * obs_dim_);
    std::copy(action.begin(), action.end(), action_.begin() + slot * action_dim_);
    reward_[slot] = reward;
    terminal_[slot] = terminal ? T(1) : T(0);
    cursor_ = (cursor_ + 1) % capacity_;
    if (size_ < capacity_) ++size_;
  }

  void push(const Transition<T>& t) { push(t.obs, t.action, t.reward, t.next_obs, t.terminal); }

  /// i = 0 is the oldest stored transition.
  Transition<T> at(std::size_t i) const {
    if (i >= size_) throw std::out_of_range("ReplayBuffer::at");
    const std::size_t oldest = size_ < capacity_ ? 0 : cursor_;
    return slot((oldest + i) % capacity_);
  }

  /// Uniform sampling with replacement over the filled slots.
  void sample(std::size_t batch, Prng& rng, TransitionBatch<T>& out) const {
    if (size_ == 0) throw std::logic_error("ReplayBuffer::sample: buffer is empty");
    if (out.size() != batch || out.obs.cols() != obs_dim_ || out.action.cols() != action_dim_)
      out = TransitionBatch<T>(batch, obs_dim_, action_dim_);
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t s = rng.below(size_);
      std::copy_n(obs_.begin() + s * obs_dim_, obs_dim_, out.obs.data() + b * obs_dim_);
      std::copy_n(next_obs_.begin() + s * obs_dim_, obs_dim_, out.next_obs.data() + b * obs_dim_);
      std::copy_n(action_.begin() + s * action_dim_, action_dim_, out.action.data() + b * action_dim_);
      out.reward[b] = reward_[s];
      out.terminal[b] = terminal_[s];
    }
  }

  TransitionBatch<T> sample(std::size_t batch, Prng& rng) const {
    TransitionBatch<T> out(batch, obs_dim_, action_dim_);
    sample(batch, rng, out);
    return out;
  }

 private:
  Transition<T> slot(std::size_t s) const {
    Transition<T> t;
    t.obs.assign(obs_.begin() + s * obs_dim_, obs_.begin() + (s + 1) * obs_dim_);
    t.next_obs.assign(next_obs_.begin() + s * obs_dim_, next_obs_.begin() + (s + 1) * obs_dim_);
    t.action.assign(action_.begin() + s * action_dim_, action_.begin() + (s + 1) * action_dim_);
    t.reward = reward_[s];
    t.terminal = terminal_[s] != T(0);
    return t;
  }

  std::size_t capacity_;
  std::size_t obs_dim_;
  std::size_t action_dim_;
  std::size_t size_ = 0;
  std::size_t cursor_ = 0;
  std::vector<T> obs_;
  std::vector<T> next_obs_;
  std::vector<T> action_;
  std::vector<T> reward_;
  std::vector<T> terminal_;
};

}  // namespace fastrl::rl
