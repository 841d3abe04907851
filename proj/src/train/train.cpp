#include "fastrl/train/train.hpp"

#include <algorithm>
#include <chrono>
#include <memory>
#include <stdexcept>

#include "fastrl/rl/replay_buffer.hpp"
#include "fastrl/rl/rollout_buffer.hpp"

namespace fastrl::train {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

constexpr std::size_t kObs = env::Pendulum::kObservationDim;
constexpr std::size_t kAct = env::Pendulum::kActionDim;
constexpr float kTorque = static_cast<float>(env::Pendulum::kMaxTorque);

void write_obs(const env::Pendulum::Observation& o, float* dst) {
  for (std::size_t i = 0; i < kObs; ++i) dst[i] = static_cast<float>(o[i]);
}

// Tracks wall-clock time with evaluation excluded from the training share.
struct Timer {
  Clock::time_point start = Clock::now();
  double eval_seconds = 0;
};

class EvalRunner {
 public:
  EvalRunner(const TrainRunConfig& cfg, RunRecord& record, Timer& timer, const EvalCallback& cb)
      : cfg_(cfg), record_(record), timer_(timer), cb_(cb) {}

  void operator()(std::uint64_t step, const BatchPolicy& policy) {
    const auto t0 = Clock::now();
    EvalPoint p;
    p.step = step;
    p.returns = evaluate_policy(policy, cfg_.eval_episodes, stream(cfg_.seed, Stream::Eval));
    timer_.eval_seconds += seconds_since(t0);
    p.elapsed_seconds = seconds_since(timer_.start);
    record_.evaluations.push_back(std::move(p));
    if (cb_) cb_(record_.evaluations.back());
  }

 private:
  const TrainRunConfig& cfg_;
  RunRecord& record_;
  Timer& timer_;
  const EvalCallback& cb_;
};

template <typename Agent, typename Update>
void train_off_policy(const TrainRunConfig& cfg, Agent& agent, std::size_t batch_size, RunRecord& record,
                      EvalRunner& evaluate, Update&& update) {
  const env::Pendulum env;
  Prng env_rng = stream(cfg.seed, Stream::Env);
  Prng policy_rng = stream(cfg.seed, Stream::Policy);
  Prng replay_rng = stream(cfg.seed, Stream::Replay);
  rl::ReplayBuffer<float> replay(cfg.replay_capacity, kObs, kAct);
  rl::TransitionBatch<float> batch(batch_size, kObs, kAct);
  const BatchPolicy greedy = greedy_policy(agent);

  evaluate(0, greedy);
  auto state = env.reset(env_rng);
  Matrix<float> obs(1, kObs), next_obs(1, kObs), action(1, kAct);
  write_obs(env.observe(state), obs.data());
  for (std::uint64_t step = 1; step <= cfg.total_steps; ++step) {
    if (step <= cfg.warmup_steps) action(0, 0) = policy_rng.uniform<float>(-kTorque, kTorque);
    else agent.act(obs, policy_rng, action);
    const auto r = env.step(state, static_cast<double>(action(0, 0)));
    write_obs(r.observation, next_obs.data());
    replay.push(obs.flat(), action.flat(), static_cast<float>(r.reward), next_obs.flat(), r.terminated);
    if (r.terminated || r.truncated) {
      state = env.reset(env_rng);
      write_obs(env.observe(state), obs.data());
    } else {
      state = r.next_state;
      obs = next_obs;
    }
    if (step >= cfg.warmup_steps) {
      replay.sample(batch_size, replay_rng, batch);
      update(batch, policy_rng);
      ++record.iterations;
    }
    ++record.env_steps;
    if (step % cfg.eval_interval == 0 || step == cfg.total_steps) evaluate(step, greedy);
  }
}

void train_ppo(const TrainRunConfig& cfg, rl::PpoAgent<float>& agent, RunRecord& record, EvalRunner& evaluate) {
  const env::Pendulum env;
  const auto& pc = cfg.ppo;
  const std::size_t n_envs = pc.num_envs;
  Prng env_rng = stream(cfg.seed, Stream::Env);
  Prng policy_rng = stream(cfg.seed, Stream::Policy);
  const BatchPolicy greedy = greedy_policy(agent);

  evaluate(0, greedy);
  std::vector<env::PendulumState> states(n_envs);
  Matrix<float> obs(n_envs, kObs), actions(n_envs, kAct), final_obs(1, kObs);
  std::vector<float> log_probs(n_envs), values(n_envs);
  for (std::size_t e = 0; e < n_envs; ++e) {
    states[e] = env.reset(env_rng);
    write_obs(env.observe(states[e]), obs.data() + e * kObs);
  }

  const std::uint64_t per_rollout = n_envs * pc.steps_per_env;
  std::unique_ptr<rl::RolloutBuffer<float>> rollout;
  std::uint64_t done = 0;
  while (done < cfg.total_steps) {
    const std::uint64_t remaining = cfg.total_steps - done;
    const std::size_t steps =
        remaining >= per_rollout ? pc.steps_per_env : static_cast<std::size_t>((remaining + n_envs - 1) / n_envs);
    if (!rollout || rollout->steps() != steps)
      rollout = std::make_unique<rl::RolloutBuffer<float>>(n_envs, steps, kObs, kAct);
    rollout->clear();
    for (std::size_t t = 0; t < steps; ++t) {
      agent.act(obs, policy_rng, actions, log_probs, values);
      for (std::size_t e = 0; e < n_envs; ++e) {
        const auto r = env.step(states[e], static_cast<double>(actions(e, 0)));
        rl::StepEnd end = rl::StepEnd::None;
        float truncation_value = 0;
        if (r.terminated) {
          end = rl::StepEnd::Terminated;
        } else if (r.truncated) {
          end = rl::StepEnd::Truncated;
          write_obs(r.observation, final_obs.data());
          agent.value(final_obs, std::span<float>(&truncation_value, 1));
        }
        rollout->store(e, t, obs.view().row(e), actions.view().row(e), log_probs[e], values[e],
                       static_cast<float>(r.reward), end, truncation_value);
        states[e] = end == rl::StepEnd::None ? r.next_state : env.reset(env_rng);
        write_obs(end == rl::StepEnd::None ? r.observation : env.observe(states[e]), obs.data() + e * kObs);
      }
    }
    agent.value(obs, values);
    for (std::size_t e = 0; e < n_envs; ++e) rollout->set_bootstrap(e, values[e]);
    rollout->finalize(pc.gamma, pc.lambda);
    agent.update(*rollout, policy_rng);
    ++record.iterations;

    const std::uint64_t before = done;
    done += static_cast<std::uint64_t>(steps) * n_envs;
    record.env_steps = done;
    if (done / cfg.eval_interval != before / cfg.eval_interval || done >= cfg.total_steps) evaluate(done, greedy);
  }
}

template <typename T>
std::vector<std::size_t> widths_of(const nn::Mlp<T>& net) {
  std::vector<std::size_t> w;
  for (const auto& l : net.layers()) w.push_back(l.out);
  return w;
}

}  // namespace

IqmResult RunRecord::final_iqm() const {
  if (evaluations.empty()) throw std::logic_error("RunRecord::final_iqm: no evaluations");
  return iqm(evaluations.back().returns);
}

std::vector<double> evaluate_policy(const BatchPolicy& policy, std::size_t episodes, Prng rng) {
  const env::Pendulum env;
  std::vector<env::PendulumState> states(episodes);
  std::vector<double> returns(episodes, 0.0);
  std::vector<std::size_t> active(episodes);
  for (std::size_t i = 0; i < episodes; ++i) {
    states[i] = env.reset(rng);
    active[i] = i;
  }
  Matrix<float> obs(std::max<std::size_t>(episodes, 1), kObs), actions(std::max<std::size_t>(episodes, 1), kAct);
  while (!active.empty()) {
    const std::size_t n = active.size();
    MatrixView<float> o(obs.data(), n, kObs);
    MatrixView<float> a(actions.data(), n, kAct);
    for (std::size_t j = 0; j < n; ++j) write_obs(env.observe(states[active[j]]), o.data() + j * kObs);
    policy(o, a);
    std::size_t kept = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t i = active[j];
      const auto r = env.step(states[i], static_cast<double>(a(j, 0)));
      returns[i] += r.reward;
      states[i] = r.next_state;
      if (!(r.terminated || r.truncated)) active[kept++] = i;
    }
    active.resize(kept);
  }
  return returns;
}

BatchPolicy greedy_policy(const rl::SacAgent<float>& agent) {
  auto ws = std::make_shared<nn::Mlp<float>::Workspace>();
  return [&agent, ws](ConstMatrixView<float> obs, MatrixView<float> actions) {
    agent.act_deterministic(obs, actions, *ws);
  };
}

BatchPolicy greedy_policy(const rl::Td3Agent<float>& agent) {
  auto ws = std::make_shared<nn::Mlp<float>::Workspace>();
  return [&agent, ws](ConstMatrixView<float> obs, MatrixView<float> actions) {
    agent.act_deterministic(obs, actions, *ws);
  };
}

BatchPolicy greedy_policy(const rl::PpoAgent<float>& agent) {
  auto ws = std::make_shared<nn::Mlp<float>::Workspace>();
  return [&agent, ws](ConstMatrixView<float> obs, MatrixView<float> actions) {
    agent.act_deterministic(obs, actions, *ws);
  };
}

deploy::PolicyCheckpoint export_policy(const rl::SacAgent<float>& agent) {
  const auto& actor = agent.actor();
  const std::size_t a_dim = agent.action_dim();
  auto widths = widths_of(actor);
  widths.back() = a_dim;
  std::vector<Activation> acts;
  for (const auto& l : actor.layers()) acts.push_back(l.activation);
  acts.back() = Activation::Tanh;
  nn::Mlp<float> head(actor.input_dim(), widths, acts, actor.backend());
  const std::size_t last = actor.num_layers() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    std::copy_n(actor.weights(l).data(), actor.weights(l).size(), head.weights(l).data());
    std::copy(actor.bias(l).begin(), actor.bias(l).end(), head.bias(l).begin());
  }
  const auto w = actor.weights(last);
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < a_dim; ++j) head.weights(last)(i, j) = w(i, j);
  for (std::size_t j = 0; j < a_dim; ++j) head.bias(last)[j] = actor.bias(last)[j];
  const std::vector<double> scale(a_dim, agent.action_scale());
  return deploy::PolicyCheckpoint::from_mlp(head, scale);
}

deploy::PolicyCheckpoint export_policy(const rl::Td3Agent<float>& agent) {
  const std::vector<double> scale(agent.action_dim(), agent.action_scale());
  return deploy::PolicyCheckpoint::from_mlp(agent.actor(), scale);
}

deploy::PolicyCheckpoint export_policy(const rl::PpoAgent<float>& agent) {
  return deploy::PolicyCheckpoint::from_mlp(agent.actor());
}

RunRecord train(const TrainRunConfig& config, deploy::PolicyCheckpoint* final_policy, const EvalCallback& on_eval) {
  config.validate();
  RunRecord record;
  record.config = config;
  Prng init = stream(config.seed, Stream::Init);

  // Agents are built before the clock starts.
  std::optional<rl::SacAgent<float>> sac;
  std::optional<rl::Td3Agent<float>> td3;
  std::optional<rl::PpoAgent<float>> ppo;
  switch (config.algorithm) {
    case Algorithm::Sac: sac.emplace(kObs, kAct, kTorque, config.sac, init, config.backend); break;
    case Algorithm::Td3: td3.emplace(kObs, kAct, kTorque, config.td3, init, config.backend); break;
    case Algorithm::Ppo: ppo.emplace(kObs, kAct, config.ppo, init, config.backend); break;
  }

  Timer timer;
  EvalRunner evaluate(config, record, timer, on_eval);
  switch (config.algorithm) {
    case Algorithm::Sac:
      train_off_policy(config, *sac, config.sac.batch_size, record, evaluate,
                       [&](const rl::TransitionBatch<float>& b, Prng& rng) { sac->update(b, rng); });
      break;
    case Algorithm::Td3:
      train_off_policy(config, *td3, config.td3.batch_size, record, evaluate,
                       [&](const rl::TransitionBatch<float>& b, Prng& rng) { td3->update(b, rng); });
      break;
    case Algorithm::Ppo: train_ppo(config, *ppo, record, evaluate); break;
  }
  record.total_seconds = seconds_since(timer.start);
  record.train_seconds = record.total_seconds - timer.eval_seconds;

  if (final_policy) {
    if (sac) *final_policy = export_policy(*sac);
    if (td3) *final_policy = export_policy(*td3);
    if (ppo) *final_policy = export_policy(*ppo);
  }
  return record;
}

}  // namespace fastrl::train
