#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numbers>
#include <span>

#include "fastrl/core/prng.hpp"

namespace fastrl::env {

/// What the training loops need from an environment: fixed observation and
/// action widths, a seeded reset, and a pure step function.
template <typename E>
concept Environment = requires(const E& env, typename E::State s, Prng& rng, std::span<const double> action) {
  { E::kObservationDim } -> std::convertible_to<std::size_t>;
  { E::kActionDim } -> std::convertible_to<std::size_t>;
  { env.reset(rng) } -> std::same_as<typename E::State>;
  { env.observe(s) } -> std::same_as<std::array<double, E::kObservationDim>>;
  { env.step(s, action) } -> std::same_as<typename E::StepResult>;
  { env.action_bound() } -> std::convertible_to<double>;
};

/// Wraps an angle into [-pi, pi).
inline double angle_normalize(double theta) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = std::fmod(theta + std::numbers::pi, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r -= kTwoPi;
  return r - std::numbers::pi;
}

struct PendulumState {
  double theta = 0.0;
  double theta_dot = 0.0;
  int step_count = 0;

  friend bool operator==(const PendulumState&, const PendulumState&) = default;
};

/// Gymnasium Pendulum-v1 swing-up task.
///
/// Reward is the negated cost of the state the action is applied in; the
/// torque is clipped to [-2, 2] before use. Episodes never terminate and are
/// truncated after 200 steps.
class Pendulum {
 public:
  static constexpr std::size_t kObservationDim = 3;
  static constexpr std::size_t kActionDim = 1;
  static constexpr double kGravity = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;
  static constexpr double kDt = 0.05;
  static constexpr double kMaxTorque = 2.0;
  static constexpr double kMaxSpeed = 8.0;
  static constexpr int kEpisodeLength = 200;

  using State = PendulumState;
  using Observation = std::array<double, kObservationDim>;

  struct StepResult {
    State next_state;
    Observation observation;
    double reward = 0.0;
    bool terminated = false;
    bool truncated = false;
  };

  double action_bound() const { return kMaxTorque; }

  /// theta ~ U[-pi, pi], theta_dot ~ U[-1, 1].
  State reset(Prng& rng) const {
    State s;
    s.theta = rng.uniform<double>(-std::numbers::pi, std::numbers::pi);
    s.theta_dot = rng.uniform<double>(-1.0, 1.0);
    return s;
  }

  Observation observe(const State& s) const { return {std::cos(s.theta), std::sin(s.theta), s.theta_dot}; }

  StepResult step(const State& s, std::span<const double> action) const { return step(s, action[0]); }

  StepResult step(const State& s, double torque) const {
    const double u = std::clamp(torque, -kMaxTorque, kMaxTorque);
    const double th = angle_normalize(s.theta);
    const double cost = th * th + 0.1 * s.theta_dot * s.theta_dot + 0.001 * u * u;

    double theta_dot =
        s.theta_dot + (3.0 * kGravity / (2.0 * kLength) * std::sin(s.theta) + 3.0 / (kMass * kLength * kLength) * u) * kDt;
    theta_dot = std::clamp(theta_dot, -kMaxSpeed, kMaxSpeed);

    StepResult r;
    r.next_state.theta = s.theta + theta_dot * kDt;
    r.next_state.theta_dot = theta_dot;
    r.next_state.step_count = s.step_count + 1;
    r.observation = observe(r.next_state);
    r.reward = -cost;
    r.truncated = r.next_state.step_count >= kEpisodeLength;
    return r;
  }
};

static_assert(Environment<Pendulum>);

}  // namespace fastrl::env
