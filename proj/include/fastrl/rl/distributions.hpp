#pragma once

#include <cmath>
#include <numbers>
#include <span>

#include "fastrl/core/prng.hpp"

namespace fastrl::rl {

inline constexpr double kHalfLogTwoPi = 0.91893853320467274178;  // 0.5 * log(2 pi)
inline constexpr double kSquashEpsilon = 1e-6;

/// log N(x; mean, exp(log_std)^2) for one dimension.
template <typename T>
T gaussian_log_density(T x, T mean, T log_std) {
  const T z = (x - mean) / std::exp(log_std);
  return T(-0.5) * z * z - log_std - T(kHalfLogTwoPi);
}

/// log of the squashing Jacobian correction for one dimension:
/// -log(1 - tanh(u)^2 + 1e-6) - log(scale).
template <typename T>
T squash_correction(T u, T scale) {
  const T t = std::tanh(u);
  return -std::log(T(1) - t * t + T(kSquashEpsilon)) - std::log(scale);
}

/// Samples a = scale * tanh(u), u ~ N(mean, exp(log_std)^2), per dimension.
/// Writes the action, the pre-squash value u and the standard-normal noise,
/// and returns the log-density of `a` summed over dimensions.
template <typename T>
T squashed_gaussian_sample(std::span<const T> mean, std::span<const T> log_std, T scale, Prng& rng,
                           std::span<T> action, std::span<T> pre_squash, std::span<T> noise) {
  T log_prob = T(0);
  for (std::size_t d = 0; d < mean.size(); ++d) {
    const T eps = rng.gaussian<T>();
    const T u = mean[d] + std::exp(log_std[d]) * eps;
    noise[d] = eps;
    pre_squash[d] = u;
    action[d] = scale * std::tanh(u);
    log_prob += T(-0.5) * eps * eps - log_std[d] - T(kHalfLogTwoPi) + squash_correction(u, scale);
  }
  return log_prob;
}

/// Log-density of the squashed Gaussian at pre-squash value u.
template <typename T>
T squashed_gaussian_log_prob(std::span<const T> pre_squash, std::span<const T> mean, std::span<const T> log_std,
                             T scale) {
  T log_prob = T(0);
  for (std::size_t d = 0; d < mean.size(); ++d)
    log_prob += gaussian_log_density(pre_squash[d], mean[d], log_std[d]) + squash_correction(pre_squash[d], scale);
  return log_prob;
}

/// Sum over dimensions of the diagonal Gaussian log-density.
template <typename T>
T diagonal_gaussian_log_prob(std::span<const T> x, std::span<const T> mean, std::span<const T> log_std) {
  T log_prob = T(0);
  for (std::size_t d = 0; d < mean.size(); ++d) log_prob += gaussian_log_density(x[d], mean[d], log_std[d]);
  return log_prob;
}

/// Entropy of a diagonal Gaussian.
template <typename T>
T diagonal_gaussian_entropy(std::span<const T> log_std) {
  T h = T(0);
  for (const T ls : log_std) h += ls + T(0.5) + T(kHalfLogTwoPi);
  return h;
}

}  // namespace fastrl::rl
