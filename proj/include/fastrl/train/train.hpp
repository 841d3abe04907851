#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fastrl/core/matrix.hpp"
#include "fastrl/core/prng.hpp"
#include "fastrl/deploy/checkpoint.hpp"
#include "fastrl/env/pendulum.hpp"
#include "fastrl/rl/ppo.hpp"
#include "fastrl/rl/sac.hpp"
#include "fastrl/rl/td3.hpp"
#include "fastrl/train/config.hpp"
#include "fastrl/train/stats.hpp"

namespace fastrl::train {

/// Sub-streams of the run seed.
enum class Stream : std::uint64_t { Env = 0, Policy = 1, Init = 2, Replay = 3, Eval = 4 };

inline Prng stream(std::uint64_t seed, Stream s) { return Prng(seed).split(static_cast<std::uint64_t>(s)); }

struct EvalPoint {
  std::uint64_t step = 0;
  std::vector<double> returns;
  double elapsed_seconds = 0;  // since the start of training, evaluation time included
};

struct RunRecord {
  TrainRunConfig config;
  std::vector<EvalPoint> evaluations;
  /// PPO: rollout/update cycles. SAC, TD3: gradient updates.
  std::uint64_t iterations = 0;
  std::uint64_t env_steps = 0;
  double train_seconds = 0;  // collection and updates only
  double total_seconds = 0;  // training plus evaluation
  std::string checkpoint;    // path of the exported final policy, if any

  /// IQM of the last evaluation's returns.
  IqmResult final_iqm() const;
};

/// Maps a batch of observations (rows) to actions.
using BatchPolicy = std::function<void(ConstMatrixView<float> obs, MatrixView<float> actions)>;

/// Runs `episodes` pendulum episodes side by side until each truncates.
/// Initial states come from `rng`; returns are undiscounted reward sums.
std::vector<double> evaluate_policy(const BatchPolicy& policy, std::size_t episodes, Prng rng);

/// Deterministic greedy policies of trained agents.
BatchPolicy greedy_policy(const rl::SacAgent<float>& agent);
BatchPolicy greedy_policy(const rl::Td3Agent<float>& agent);
BatchPolicy greedy_policy(const rl::PpoAgent<float>& agent);

/// Exported actor networks producing the deterministic action.
/// SAC keeps the mean half of the output layer and appends Tanh; SAC and TD3
/// carry the torque bound as action scale. PPO exports the mean network.
deploy::PolicyCheckpoint export_policy(const rl::SacAgent<float>& agent);
deploy::PolicyCheckpoint export_policy(const rl::Td3Agent<float>& agent);
deploy::PolicyCheckpoint export_policy(const rl::PpoAgent<float>& agent);

/// Observer called after each evaluation; useful for streaming results.
using EvalCallback = std::function<void(const EvalPoint&)>;

/// Seeded end-to-end training. Deterministic for a given config except for
/// the timing fields. When `final_policy` is non-null it receives the
/// exported actor at the end of training.
RunRecord train(const TrainRunConfig& config, deploy::PolicyCheckpoint* final_policy = nullptr,
                const EvalCallback& on_eval = {});

}  // namespace fastrl::train
