#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace fastrl::rl {

/// How a step ended its episode.
enum class StepEnd : std::uint8_t { None = 0, Terminated = 1, Truncated = 2 };

/// Generalized advantage estimation over one environment's trajectory.
///
///   next_v_t = truncation_values[t]  if step t was truncated
///            = value_bootstrap       if t is the last step
///            = values[t+1]           otherwise
///   delta_t  = r_t + gamma * (1 - terminated_t) * next_v_t - values[t]
///   A_t      = delta_t + gamma * lambda * [step t did not end the episode] * A_{t+1}
///   return_t = A_t + values[t]
///
/// Truncated steps bootstrap from the critic's value of the final observation;
/// terminated steps bootstrap with zero.
template <typename T>
void gae_compute(std::span<const T> rewards, std::span<const T> values, T value_bootstrap,
                 std::span<const StepEnd> step_end, std::span<const T> truncation_values, T gamma, T lambda,
                 std::span<T> advantages, std::span<T> return_targets) {
  const std::size_t n = rewards.size();
  if (values.size() != n || step_end.size() != n || truncation_values.size() != n || advantages.size() != n ||
      return_targets.size() != n)
    throw std::invalid_argument("gae_compute: all per-step arrays must have the same length");
  T next_advantage = T(0);
  for (std::size_t i = n; i-- > 0;) {
    const StepEnd end = step_end[i];
    T next_value;
    if (end == StepEnd::Truncated)
      next_value = truncation_values[i];
    else if (i + 1 == n)
      next_value = value_bootstrap;
    else
      next_value = values[i + 1];
    const T not_terminal = end == StepEnd::Terminated ? T(0) : T(1);
    const T carry = end == StepEnd::None ? T(1) : T(0);
    const T delta = rewards[i] + gamma * not_terminal * next_value - values[i];
    next_advantage = delta + gamma * lambda * carry * next_advantage;
    advantages[i] = next_advantage;
    return_targets[i] = next_advantage + values[i];
  }
}

/// (adv - mean) / (std + 1e-8) with the population standard deviation.
template <typename T>
void advantage_normalize(std::span<T> adv) {
  if (adv.size() < 2) throw std::invalid_argument("advantage_normalize: need at least two samples");
  double mean = 0;
  for (const T a : adv) mean += a;
  mean /= static_cast<double>(adv.size());
  double var = 0;
  for (const T a : adv) var += (a - mean) * (a - mean);
  var /= static_cast<double>(adv.size());
  const double denom = std::sqrt(var) + 1e-8;
  for (T& a : adv) a = static_cast<T>((a - mean) / denom);
}

}  // namespace fastrl::rl
