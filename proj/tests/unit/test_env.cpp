#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fastrl/env/pendulum.hpp"

using namespace fastrl;
using namespace fastrl::env;

TEST_CASE("angle_normalize") {
  CHECK(angle_normalize(0.0) == 0.0);
  CHECK(angle_normalize(2 * std::numbers::pi) == doctest::Approx(0.0));
  CHECK(angle_normalize(1.5 * std::numbers::pi) == doctest::Approx(-0.5 * std::numbers::pi));
  CHECK(angle_normalize(std::numbers::pi) == doctest::Approx(-std::numbers::pi));
  for (double x = -50.0; x < 50.0; x += 0.173) {
    const double r = angle_normalize(x);
    REQUIRE(r >= -std::numbers::pi);
    REQUIRE(r < std::numbers::pi);
    REQUIRE(std::cos(r) == doctest::Approx(std::cos(x)).epsilon(1e-9));
  }
}

TEST_CASE("pendulum_reset: ranges, determinism, coverage") {
  const Pendulum env;
  Prng a(5), b(5);
  CHECK(env.reset(a) == env.reset(b));
  double lo = 10, hi = -10;
  for (int i = 0; i < 10000; ++i) {
    const auto s = env.reset(a);
    REQUIRE(s.step_count == 0);
    REQUIRE(std::abs(s.theta) <= std::numbers::pi);
    REQUIRE(std::abs(s.theta_dot) <= 1.0);
    lo = std::min(lo, s.theta);
    hi = std::max(hi, s.theta);
  }
  CHECK(lo <= -std::numbers::pi + 0.1);
  CHECK(hi >= std::numbers::pi - 0.1);
}

TEST_CASE("pendulum_step: fixed points") {
  const Pendulum env;
  auto r = env.step(PendulumState{0, 0, 0}, 0.0);
  CHECK(r.reward == 0.0);
  CHECK(r.next_state.theta == 0.0);
  CHECK(r.next_state.theta_dot == 0.0);

  r = env.step(PendulumState{std::numbers::pi, 0, 0}, 0.0);
  CHECK(r.reward == doctest::Approx(-std::numbers::pi * std::numbers::pi));
  CHECK(std::abs(r.next_state.theta_dot) < 1e-12);
  CHECK_FALSE(r.terminated);
}

TEST_CASE("pendulum_step: torque is clipped and speed bounded") {
  const Pendulum env;
  const auto big = env.step(PendulumState{0.3, 0.2, 0}, 100.0);
  const auto clipped = env.step(PendulumState{0.3, 0.2, 0}, 2.0);
  CHECK(big.next_state == clipped.next_state);
  CHECK(big.reward == clipped.reward);

  Prng rng(1);
  PendulumState s = env.reset(rng);
  for (int t = 0; t < 1000; ++t) {
    const auto res = env.step(s, rng.uniform<double>(-5, 5));
    REQUIRE(std::abs(res.next_state.theta_dot) <= Pendulum::kMaxSpeed);
    REQUIRE(res.reward <= 0.0);
    REQUIRE(res.reward >= -(std::numbers::pi * std::numbers::pi + 0.1 * 64 + 0.001 * 4));
    REQUIRE(std::abs(res.observation[0]) <= 1.0);
    REQUIRE(std::abs(res.observation[1]) <= 1.0);
    s = res.truncated ? env.reset(rng) : res.next_state;
  }
}

TEST_CASE("pendulum: truncates at exactly 200 steps, never terminates") {
  const Pendulum env;
  Prng rng(2);
  PendulumState s = env.reset(rng);
  int steps = 0;
  bool truncated = false;
  while (!truncated) {
    const auto r = env.step(s, 0.5);
    REQUIRE_FALSE(r.terminated);
    truncated = r.truncated;
    s = r.next_state;
    ++steps;
  }
  CHECK(steps == 200);
}

TEST_CASE("pendulum: trajectory matches the Gymnasium reference") {
  std::ifstream in(FASTRL_TEST_DATA_DIR "/pendulum_reference.csv");
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);  // header
  std::getline(in, line);  // initial state
  const Pendulum env;
  PendulumState s{2.0, -0.5, 0};
  int rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::vector<double> f;
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(std::stod(cell));
    REQUIRE(f.size() == 7);
    const auto r = env.step(s, f[1]);
    CHECK(std::abs(r.reward - f[2]) <= 1e-6);
    CHECK(std::abs(r.observation[0] - f[3]) <= 1e-6);
    CHECK(std::abs(r.observation[1] - f[4]) <= 1e-6);
    CHECK(std::abs(r.observation[2] - f[5]) <= 1e-6);
    CHECK(r.truncated == (f[6] != 0.0));
    s = r.next_state;
    ++rows;
  }
  CHECK(rows == 200);
}
