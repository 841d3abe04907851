#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fastrl/core/kernels.hpp"
#include "fastrl/rl/ppo.hpp"
#include "fastrl/rl/sac.hpp"
#include "fastrl/rl/td3.hpp"

namespace fastrl::train {

enum class Algorithm : std::uint8_t { Sac, Td3, Ppo };

std::string_view to_string(Algorithm a);
/// Accepts "sac", "td3", "ppo" (case-insensitive).
Algorithm parse_algorithm(std::string_view s);

/// Everything that determines a training run.
///
/// Text form: one `key = value` per line, `#` starts a comment. Keys without
/// a prefix are shared; `sac.`, `td3.` and `ppo.` keys configure that
/// algorithm. `<algo>.adam_*` applies to every optimizer of the algorithm.
struct TrainRunConfig {
  Algorithm algorithm = Algorithm::Sac;
  std::string env = "pendulum";
  std::uint64_t seed = 0;
  std::uint64_t total_steps = 10000;
  /// Environment steps between evaluations. PPO evaluates after the first
  /// rollout that crosses each multiple.
  std::uint64_t eval_interval = 1000;
  std::size_t eval_episodes = 100;
  std::size_t warmup_steps = 100;
  std::size_t replay_capacity = 10000;
  Backend backend = Backend::Fused;

  rl::SacConfig<float> sac;
  rl::Td3Config<float> td3;
  rl::PpoConfig<float> ppo;

  static TrainRunConfig defaults(Algorithm a);

  /// Throws std::invalid_argument for unknown keys or unparsable values.
  void set(std::string_view key, std::string_view value);
  /// Shared keys plus the active algorithm's keys, one per line, in a fixed order.
  std::string dump() const;
  /// Starts from defaults(algorithm) (algorithm key read first, SAC if absent)
  /// and applies the remaining keys in order.
  static TrainRunConfig parse(std::string_view text);
  /// Semantic checks: known environment, positive sizes.
  void validate() const;
};

/// `key=value` split at the first '='; whitespace around both sides trimmed.
std::pair<std::string, std::string> split_assignment(std::string_view kv);

}  // namespace fastrl::train
