#include "fastrl/train/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace fastrl::train {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw std::invalid_argument("invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'");
}

template <typename U>
std::string fmt_number(U v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename U>
U parse_number(std::string_view key, std::string_view s) {
  U v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) bad_value(key, s);
  return v;
}

bool parse_bool(std::string_view key, std::string_view s) {
  const auto l = lower(s);
  if (l == "true" || l == "1") return true;
  if (l == "false" || l == "0") return false;
  bad_value(key, s);
}

std::string fmt_dims(const std::vector<std::size_t>& d) {
  std::string out;
  for (std::size_t i = 0; i < d.size(); ++i) out += (i ? "," : "") + std::to_string(d[i]);
  return out;
}

std::vector<std::size_t> parse_dims(std::string_view key, std::string_view s) {
  std::vector<std::size_t> d;
  std::string_view rest = s;
  if (!rest.empty() && rest.front() == '[' && rest.back() == ']') rest = rest.substr(1, rest.size() - 2);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto item = trim(rest.substr(0, comma));
    const auto v = parse_number<std::size_t>(key, item);
    if (v == 0) bad_value(key, s);
    d.push_back(v);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return d;
}

struct Field {
  std::string key;
  std::function<std::string()> get;
  std::function<void(std::string_view)> set;
};

template <typename U>
Field number(std::string key, U& ref) {
  return {key, [&ref] { return fmt_number(ref); }, [&ref, key](std::string_view v) { ref = parse_number<U>(key, v); }};
}

Field boolean(std::string key, bool& ref) {
  return {key, [&ref] { return std::string(ref ? "true" : "false"); },
          [&ref, key](std::string_view v) { ref = parse_bool(key, v); }};
}

Field dims(std::string key, std::vector<std::size_t>& ref) {
  return {key, [&ref] { return fmt_dims(ref); }, [&ref, key](std::string_view v) { ref = parse_dims(key, v); }};
}

Field activation(std::string key, Activation& ref) {
  return {key, [&ref] { return lower(to_string(ref)); },
          [&ref, key](std::string_view v) {
            const auto a = parse_activation(lower(v));
            if (!a) bad_value(key, v);
            ref = *a;
          }};
}

// One set of Adam hyperparameters shared by every optimizer of an algorithm.
void adam(std::vector<Field>& f, const std::string& prefix, std::vector<nn::AdamConfig<float>*> opts) {
  auto add = [&](const char* name, float nn::AdamConfig<float>::*member) {
    const std::string key = prefix + name;
    f.push_back({key, [opts, member] { return fmt_number(opts.front()->*member); },
                 [opts, member, key](std::string_view v) {
                   const float x = parse_number<float>(key, v);
                   for (auto* o : opts) o->*member = x;
                 }});
  };
  add("adam_alpha", &nn::AdamConfig<float>::learning_rate);
  add("adam_beta1", &nn::AdamConfig<float>::beta1);
  add("adam_beta2", &nn::AdamConfig<float>::beta2);
  add("adam_epsilon", &nn::AdamConfig<float>::epsilon);
}

std::vector<Field> shared_fields(TrainRunConfig& c) {
  std::vector<Field> f;
  f.push_back({"algorithm", [&c] { return std::string(to_string(c.algorithm)); },
               [&c](std::string_view v) { c.algorithm = parse_algorithm(v); }});
  f.push_back({"env", [&c] { return c.env; }, [&c](std::string_view v) { c.env = lower(v); }});
  f.push_back(number("seed", c.seed));
  f.push_back(number("total_steps", c.total_steps));
  f.push_back(number("eval_interval", c.eval_interval));
  f.push_back(number("eval_episodes", c.eval_episodes));
  f.push_back({"backend", [&c] { return lower(to_string(c.backend)); },
               [&c](std::string_view v) {
                 const auto b = parse_backend(lower(v));
                 if (!b) bad_value("backend", v);
                 c.backend = *b;
               }});
  return f;
}

std::vector<Field> sac_fields(TrainRunConfig& c) {
  auto& s = c.sac;
  std::vector<Field> f;
  f.push_back(number("warmup_steps", c.warmup_steps));
  f.push_back(number("replay_capacity", c.replay_capacity));
  f.push_back(dims("sac.actor_hidden", s.actor_hidden));
  f.push_back(dims("sac.critic_hidden", s.critic_hidden));
  f.push_back(activation("sac.activation", s.activation));
  f.push_back(number("sac.batch_size", s.batch_size));
  f.push_back(number("sac.gamma", s.gamma));
  f.push_back(number("sac.polyak", s.polyak));
  f.push_back(number("sac.initial_alpha", s.initial_alpha));
  f.push_back(boolean("sac.learn_alpha", s.learn_alpha));
  f.push_back({"sac.target_entropy", [&s] { return s.target_entropy ? fmt_number(*s.target_entropy) : "auto"; },
               [&s](std::string_view v) {
                 if (lower(v) == "auto") s.target_entropy.reset();
                 else s.target_entropy = parse_number<float>("sac.target_entropy", v);
               }});
  f.push_back(number("sac.log_std_min", s.log_std_min));
  f.push_back(number("sac.log_std_max", s.log_std_max));
  adam(f, "sac.", {&s.actor_optimizer, &s.critic_optimizer, &s.alpha_optimizer});
  return f;
}

std::vector<Field> td3_fields(TrainRunConfig& c) {
  auto& t = c.td3;
  std::vector<Field> f;
  f.push_back(number("warmup_steps", c.warmup_steps));
  f.push_back(number("replay_capacity", c.replay_capacity));
  f.push_back(dims("td3.actor_hidden", t.actor_hidden));
  f.push_back(dims("td3.critic_hidden", t.critic_hidden));
  f.push_back(activation("td3.activation", t.activation));
  f.push_back(number("td3.batch_size", t.batch_size));
  f.push_back(number("td3.gamma", t.gamma));
  f.push_back(number("td3.polyak", t.polyak));
  f.push_back(number("td3.exploration_noise", t.exploration_noise));
  f.push_back(number("td3.target_noise", t.target_noise));
  f.push_back(number("td3.target_noise_clip", t.target_noise_clip));
  f.push_back(number("td3.policy_delay", t.policy_delay));
  adam(f, "td3.", {&t.actor_optimizer, &t.critic_optimizer});
  return f;
}

std::vector<Field> ppo_fields(TrainRunConfig& c) {
  auto& p = c.ppo;
  std::vector<Field> f;
  f.push_back(dims("ppo.actor_hidden", p.actor_hidden));
  f.push_back(dims("ppo.critic_hidden", p.critic_hidden));
  f.push_back(activation("ppo.activation", p.activation));
  f.push_back(number("ppo.batch_size", p.batch_size));
  f.push_back(number("ppo.num_envs", p.num_envs));
  f.push_back(number("ppo.steps_per_env", p.steps_per_env));
  f.push_back(number("ppo.epochs", p.epochs));
  f.push_back(number("ppo.gamma", p.gamma));
  f.push_back(number("ppo.lambda", p.lambda));
  f.push_back(number("ppo.clip", p.clip));
  f.push_back(number("ppo.entropy_coef", p.entropy_coef));
  f.push_back(boolean("ppo.normalize_advantage", p.normalize_advantage));
  f.push_back(number("ppo.value_coef", p.value_coef));
  f.push_back(number("ppo.initial_log_std", p.initial_log_std));
  adam(f, "ppo.", {&p.actor_optimizer, &p.critic_optimizer});
  return f;
}

std::vector<Field> active_fields(TrainRunConfig& c) {
  auto f = shared_fields(c);
  auto extra = c.algorithm == Algorithm::Sac ? sac_fields(c) : c.algorithm == Algorithm::Td3 ? td3_fields(c) : ppo_fields(c);
  for (auto& e : extra) f.push_back(std::move(e));
  return f;
}

std::vector<Field> all_fields(TrainRunConfig& c) {
  auto f = shared_fields(c);
  for (auto* make : {&sac_fields, &td3_fields, &ppo_fields})
    for (auto& e : make(c))
      if (std::none_of(f.begin(), f.end(), [&](const Field& x) { return x.key == e.key; })) f.push_back(std::move(e));
  return f;
}

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Sac: return "sac";
    case Algorithm::Td3: return "td3";
    case Algorithm::Ppo: return "ppo";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view s) {
  const auto l = lower(trim(s));
  if (l == "sac") return Algorithm::Sac;
  if (l == "td3") return Algorithm::Td3;
  if (l == "ppo") return Algorithm::Ppo;
  throw std::invalid_argument("unknown algorithm '" + std::string(s) + "' (expected sac, td3 or ppo)");
}

TrainRunConfig TrainRunConfig::defaults(Algorithm a) {
  TrainRunConfig c;
  c.algorithm = a;
  if (a == Algorithm::Ppo) {
    c.total_steps = 300000;
    c.eval_interval = c.ppo.num_envs * c.ppo.steps_per_env;
  }
  return c;
}

void TrainRunConfig::set(std::string_view key, std::string_view value) {
  const auto k = trim(key);
  const auto v = trim(value);
  for (auto& f : all_fields(*this))
    if (f.key == k) {
      f.set(v);
      return;
    }
  throw std::invalid_argument("unknown configuration key '" + std::string(k) + "'");
}

std::string TrainRunConfig::dump() const {
  TrainRunConfig copy = *this;
  std::string out;
  for (const auto& f : active_fields(copy)) out += f.key + " = " + f.get() + "\n";
  return out;
}

std::pair<std::string, std::string> split_assignment(std::string_view kv) {
  const auto eq = kv.find('=');
  if (eq == std::string_view::npos) throw std::invalid_argument("expected key=value, got '" + std::string(kv) + "'");
  return {std::string(trim(kv.substr(0, eq))), std::string(trim(kv.substr(eq + 1)))};
}

TrainRunConfig TrainRunConfig::parse(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view l = line;
    if (const auto hash = l.find('#'); hash != std::string_view::npos) l = l.substr(0, hash);
    l = trim(l);
    if (l.empty()) continue;
    try {
      entries.push_back(split_assignment(l));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  Algorithm algo = Algorithm::Sac;
  for (const auto& [k, v] : entries)
    if (k == "algorithm") algo = parse_algorithm(v);
  TrainRunConfig c = defaults(algo);
  for (const auto& [k, v] : entries) c.set(k, v);
  return c;
}

void TrainRunConfig::validate() const {
  if (env != "pendulum") throw std::invalid_argument("unknown environment '" + env + "' (supported: pendulum)");
  if (eval_episodes == 0) throw std::invalid_argument("eval_episodes must be positive");
  if (eval_interval == 0) throw std::invalid_argument("eval_interval must be positive");
  if (algorithm == Algorithm::Ppo) {
    if (ppo.num_envs == 0 || ppo.steps_per_env == 0 || ppo.batch_size == 0 || ppo.epochs == 0)
      throw std::invalid_argument("ppo sizes must be positive");
  } else {
    const std::size_t batch = algorithm == Algorithm::Sac ? sac.batch_size : td3.batch_size;
    if (batch == 0 || replay_capacity == 0) throw std::invalid_argument("batch size and replay capacity must be positive");
    if (algorithm == Algorithm::Td3 && td3.policy_delay == 0) throw std::invalid_argument("td3.policy_delay must be positive");
  }
}

}  // namespace fastrl::train
