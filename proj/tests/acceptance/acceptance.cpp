// Acceptance harness. Prints one PASS/FAIL line per criterion; exit status is
// nonzero if any selected criterion fails. `--criterion N` (repeatable)
// selects criteria, default all.
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "fastrl/deploy/checkpoint.hpp"
#include "fastrl/deploy/inference.hpp"
#include "fastrl/nn/mlp.hpp"
#include "fastrl/rl/gae.hpp"
#include "fastrl/train/stats.hpp"
#include "fastrl/train/train.hpp"
#include "support/alloc_counter.hpp"

using namespace fastrl;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

template <typename T>
Matrix<T> random_matrix(std::size_t r, std::size_t c, Prng& rng, T lo = T(-1), T hi = T(1)) {
  Matrix<T> m(r, c);
  for (auto& x : m.flat()) x = rng.uniform<T>(lo, hi);
  return m;
}

// 1. Backprop against central finite differences.
Outcome gradients() {
  Prng rng(101);
  constexpr double h = 1e-5;
  constexpr int kNets = 60;
  double worst = 0;
  std::size_t entries = 0, bad = 0;
  for (int trial = 0; trial < kNets; ++trial) {
    const std::size_t in = 1 + rng.below(4), h1 = 1 + rng.below(8), h2 = 1 + rng.below(8), out = 1 + rng.below(2);
    const std::size_t batch = 1 + rng.below(5);
    const auto hidden_act = static_cast<Activation>(trial % 3);
    const auto out_act = static_cast<Activation>(rng.below(3));
    auto net = nn::Mlp<double>::init({in, {h1, h2}, out, hidden_act, out_act}, rng,
                                     trial % 2 ? Backend::Fused : Backend::Generic);
    for (auto& p : net.parameters()) p += rng.uniform<double>(-0.3, 0.3);
    const auto x = random_matrix<double>(batch, in, rng);
    const auto probe = random_matrix<double>(batch, out, rng);
    auto loss = [&] {
      nn::Mlp<double>::Workspace ws;
      const auto y = std::as_const(net).forward(x, ws);
      double s = 0;
      for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i] * probe.data()[i];
      return s;
    };
    net.forward(x, true);
    net.backward(probe);
    const std::vector<double> grads(net.gradients().begin(), net.gradients().end());
    auto params = net.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + h;
      const double up = loss();
      params[i] = saved - h;
      const double down = loss();
      params[i] = saved;
      const double fd = (up - down) / (2 * h);
      const double scale = std::max({std::abs(fd), std::abs(grads[i]), 1e-3});
      const double rel = std::abs(fd - grads[i]) / scale;
      worst = std::max(worst, rel);
      bad += rel > 1e-4;
      ++entries;
    }
  }
  return {bad == 0, fmt("%d nets, %zu gradient entries, worst relative error %.2e (limit 1e-4)", kNets, entries, worst)};
}

// Explicit sum of discounted TD residuals, cut after the step that ends an episode.
std::vector<double> explicit_gae(const std::vector<double>& r, const std::vector<double>& v, double bootstrap,
                                 const std::vector<rl::StepEnd>& ends, const std::vector<double>& trunc, double gamma,
                                 double lambda) {
  const std::size_t n = r.size();
  std::vector<double> delta(n), adv(n);
  for (std::size_t t = 0; t < n; ++t) {
    double next = t + 1 == n ? bootstrap : v[t + 1];
    if (ends[t] == rl::StepEnd::Truncated) next = trunc[t];
    if (ends[t] == rl::StepEnd::Terminated) next = 0;
    delta[t] = r[t] + gamma * next - v[t];
  }
  for (std::size_t t = 0; t < n; ++t) {
    double sum = 0, w = 1;
    for (std::size_t l = t; l < n; ++l) {
      sum += w * delta[l];
      w *= gamma * lambda;
      if (ends[l] != rl::StepEnd::None) break;
    }
    adv[t] = sum;
  }
  return adv;
}

// 2.
Outcome gae_oracle() {
  Prng rng(202);
  constexpr int kInstances = 5000;
  double worst = 0;
  for (int trial = 0; trial < kInstances; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    std::vector<double> r(n), v(n), trunc(n), adv(n), ret(n);
    std::vector<rl::StepEnd> ends(n, rl::StepEnd::None);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = rng.uniform<double>(-10, 10);
      v[i] = rng.uniform<double>(-10, 10);
      trunc[i] = rng.uniform<double>(-10, 10);
      if (trial % 2) {
        const auto k = rng.below(6);
        ends[i] = k == 0 ? rl::StepEnd::Terminated : (k == 1 ? rl::StepEnd::Truncated : rl::StepEnd::None);
      }
    }
    const double boot = rng.uniform<double>(-10, 10);
    const double gamma = rng.uniform<double>(0, 1), lambda = rng.uniform<double>(0, 1);
    rl::gae_compute<double>(r, v, boot, ends, trunc, gamma, lambda, adv, ret);
    const auto expected = explicit_gae(r, v, boot, ends, trunc, gamma, lambda);
    for (std::size_t t = 0; t < n; ++t) {
      worst = std::max(worst, std::abs(adv[t] - expected[t]));
      worst = std::max(worst, std::abs(ret[t] - (expected[t] + v[t])));
    }
  }
  return {worst <= 1e-10, fmt("%d instances (T<=8), max abs error %.2e (limit 1e-10)", kInstances, worst)};
}

struct SeedResult {
  std::uint64_t seed = 0;
  double final_iqm = 0;
  double seconds = 0;
};

std::vector<SeedResult> train_seeds(train::Algorithm algo, int seeds) {
  std::vector<SeedResult> out(static_cast<std::size_t>(seeds));
#pragma omp parallel for schedule(dynamic, 1)
  for (int s = 0; s < seeds; ++s) {
    auto cfg = train::TrainRunConfig::defaults(algo);
    cfg.seed = static_cast<std::uint64_t>(s);
    const auto rec = train::train(cfg);
    out[s] = {cfg.seed, rec.final_iqm().mean, rec.total_seconds};
#pragma omp critical(acceptance_log)
    std::fprintf(stderr, "  %s seed %d: final IQM %.1f in %.1f s\n", std::string(train::to_string(algo)).c_str(), s,
                 out[s].final_iqm, out[s].seconds);
  }
  return out;
}

Outcome convergence(train::Algorithm algo, double threshold, int need, double max_seconds) {
  const auto results = train_seeds(algo, 10);
  int good = 0;
  double slowest = 0;
  std::ostringstream iqms;
  for (const auto& r : results) {
    good += r.final_iqm >= threshold;
    slowest = std::max(slowest, r.seconds);
    iqms << (r.seed ? " " : "") << fmt("%.0f", r.final_iqm);
  }
  // max_seconds <= 0: timing reported only.
  const std::string limit = max_seconds > 0 ? fmt(" (limit %.0f s)", max_seconds) : std::string(" (no limit)");
  std::string detail = fmt("%d/10 seeds reach final IQM >= %.0f (need %d); slowest seed %.1f s", good, threshold, need,
                           slowest) +
                       limit + "; IQMs [" + iqms.str() + "]";
  return {good >= need && (max_seconds <= 0 || slowest < max_seconds), detail};
}

// 6. Generic vs Fused kernels, then whole SAC runs under each backend.
Outcome backend_equivalence() {
  Prng rng(606);
  constexpr int kCases = 10000;
  double worst = 0;
  std::size_t values = 0;
  auto compare = [&](const Matrix<float>& x, const Matrix<float>& y) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double a = x.data()[i], b = y.data()[i];
      const double denom = std::max(std::abs(a), std::abs(b));
      worst = std::max(worst, denom == 0 ? 0.0 : std::abs(a - b) / denom);
    }
    values += x.size();
  };
  for (int c = 0; c < kCases; ++c) {
    const std::size_t m = 1 + rng.below(48), k = 1 + rng.below(64);
    constexpr std::size_t kStatic[] = {1, 2, 4, 64};
    const std::size_t n = rng.below(4) == 0 ? kStatic[rng.below(4)] : 1 + rng.below(64);
    const auto a = random_matrix<float>(m, k, rng), b = random_matrix<float>(k, n, rng);
    const auto d = random_matrix<float>(m, n, rng);
    std::vector<float> bias(n);
    for (auto& v : bias) v = rng.uniform<float>(-1.f, 1.f);
    const auto act = static_cast<Activation>(rng.below(3));
    Matrix<float> g(m, n), f(m, n), gp(m, n), fp(m, n), gw(k, n), fw(k, n), gx(m, k), fx(m, k);
    kernels::dense(Backend::Generic, a, b, std::span<const float>(bias), act, g, gp.view());
    kernels::dense(Backend::Fused, a, b, std::span<const float>(bias), act, f, fp.view());
    kernels::matmul_at_b(Backend::Generic, a, d, gw);
    kernels::matmul_at_b(Backend::Fused, a, d, fw);
    kernels::matmul_a_bt(Backend::Generic, d, b, gx);
    kernels::matmul_a_bt(Backend::Fused, d, b, fx);
    compare(g, f);
    compare(gp, fp);
    compare(gw, fw);
    compare(gx, fx);
  }
  auto cfg = train::TrainRunConfig::defaults(train::Algorithm::Sac);
  cfg.backend = Backend::Generic;
  const double generic = train::train(cfg).final_iqm().mean;
  cfg.backend = Backend::Fused;
  const double fused = train::train(cfg).final_iqm().mean;
  const double gap = std::abs(generic - fused);
  return {worst <= 1e-5 && gap < 5,
          fmt("%d kernel cases (%zu values), max relative difference %.2e (limit 1e-5); SAC seed 0 final IQM generic "
              "%.2f vs fused %.2f, gap %.3f (limit 5)",
              kCases, values, worst, generic, fused, gap)};
}

// 7.
Outcome determinism() {
  std::ostringstream detail;
  bool pass = true;
  for (const auto algo : {train::Algorithm::Sac, train::Algorithm::Td3, train::Algorithm::Ppo}) {
    auto cfg = train::TrainRunConfig::defaults(algo);
    cfg.seed = 7;
    const auto a = train::train(cfg), b = train::train(cfg);
    bool same = a.evaluations.size() == b.evaluations.size();
    std::size_t returns = 0;
    for (std::size_t k = 0; same && k < a.evaluations.size(); ++k) {
      same = a.evaluations[k].step == b.evaluations[k].step && a.evaluations[k].returns == b.evaluations[k].returns;
      returns += a.evaluations[k].returns.size();
    }
    pass = pass && same;
    detail << (algo == train::Algorithm::Sac ? "" : "; ") << train::to_string(algo) << ' '
           << (same ? "identical" : "DIFFERENT") << " (" << returns << " returns)";
  }
  return {pass, "two runs per algorithm at default config, seed 7: " + detail.str()};
}

// 8.
Outcome checkpoint_and_runtime() {
  Prng rng(808);
  const auto net = nn::Mlp<float>::init({13, {64, 64}, 4, Activation::ReLU, Activation::Identity}, rng);
  const auto ckpt = deploy::PolicyCheckpoint::from_mlp(net);
  const auto bytes = deploy::encode_checkpoint(ckpt);
  const auto decoded = deploy::decode_checkpoint(bytes);
  const bool round_trip = decoded == ckpt && deploy::encode_checkpoint(decoded) == bytes;
  auto back = decoded.to_mlp<float>(Backend::Fused);
  const bool params_exact = std::equal(back.parameters().begin(), back.parameters().end(), net.parameters().begin(),
                                       net.parameters().end());
  constexpr int kInputs = 10000;
  std::size_t mismatches = 0;
  for (const auto backend : {Backend::Generic, Backend::Fused}) {
    auto mlp = decoded.to_mlp<float>(backend);
    deploy::InferenceRuntime<float> rt(decoded, backend);
    Matrix<float> x(1, 13);
    for (int i = 0; i < kInputs; ++i) {
      for (auto& v : x.flat()) v = rng.uniform<float>(-3.f, 3.f);
      const auto ref = mlp.forward(x, false);
      const auto out = rt.forward(x.flat());
      for (std::size_t j = 0; j < 4; ++j) mismatches += out[j] != ref(0, j);
    }
  }
  return {round_trip && params_exact && mismatches == 0,
          fmt("13-[64,64]-4 (%zu parameters, %zu bytes): round trip %s; runtime vs training forward on %d inputs x 2 "
              "backends: %zu mismatching outputs",
              ckpt.parameters.size(), bytes.size(), round_trip && params_exact ? "bit exact" : "NOT exact", kInputs,
              mismatches)};
}

// 9.
Outcome zero_allocation() {
  Prng rng(909);
  const auto net = nn::Mlp<float>::init({13, {64, 64}, 4, Activation::ReLU, Activation::Tanh}, rng);
  const auto ckpt = deploy::PolicyCheckpoint::from_mlp(net, std::vector<double>(4, 2.0));
  constexpr int kCalls = 1'000'000;
  std::ostringstream detail;
  bool pass = true;
  for (const auto backend : {Backend::Generic, Backend::Fused}) {
    deploy::InferenceRuntime<float> rt(ckpt, backend);
    std::vector<float> obs(13, 0.1f), act(4);
    float sink = 0;
    const auto before = test::allocation_count();
    for (int i = 0; i < kCalls; ++i) {
      obs[static_cast<std::size_t>(i) % 13] = static_cast<float>(i % 11) * 0.1f - 0.5f;
      if (i % 2)
        sink += rt.forward(obs)[0];
      else
        rt.act(obs, act);
    }
    const auto allocations = test::allocation_count() - before;
    pass = pass && allocations == 0 && std::isfinite(sink);
    detail << (backend == Backend::Generic ? "" : ", ") << to_string(backend) << ' ' << allocations;
  }
  return {pass, fmt("%d calls per backend after init; allocations: ", kCalls) + detail.str()};
}

// 10.
Outcome iqm_suite() {
  bool pass = true;
  std::ostringstream detail;
  const std::vector<double> constant(37, -123.5);
  const auto c = train::iqm(constant);
  const bool const_ok = c.mean == -123.5 && c.stddev == 0;
  std::vector<double> ramp(20);
  std::iota(ramp.begin(), ramp.end(), 1.0);
  const double ramp_iqm = train::iqm(ramp).mean;
  const bool ramp_ok = std::abs(ramp_iqm - 10.5) <= 1e-12;
  Prng rng(1010);
  double perm_gap = 0, shift_gap = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> v(1 + rng.below(150));
    for (auto& x : v) x = rng.uniform<double>(-1500, 0);
    const double base = train::iqm(v).mean;
    auto shuffled = v;
    for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
    perm_gap = std::max(perm_gap, std::abs(train::iqm(shuffled).mean - base));
    const double shift = rng.uniform<double>(-100, 100);
    auto moved = v;
    for (auto& x : moved) x += shift;
    shift_gap = std::max(shift_gap, std::abs(train::iqm(moved).mean - (base + shift)));
  }
  const bool perm_ok = perm_gap <= 1e-9, shift_ok = shift_gap <= 1e-9;
  pass = const_ok && ramp_ok && perm_ok && shift_ok;
  return {pass, fmt("constant list %s; IQM(1..20) = %.12g; permutation max gap %.1e; translation max gap %.1e",
                    const_ok ? "exact" : "WRONG", ramp_iqm, perm_gap, shift_gap)};
}

// 11. Parameter ratios for a 20-input, 1-output value network.
Outcome parameter_counts() {
  struct Row {
    std::vector<std::size_t> hidden;
    double printed;
  };
  const std::vector<Row> rows{{{50, 50}, 1.0},     {{100, 50, 25}, 2.3},   {{400, 300}, 35.3}, {{64, 64}, 1.5},
                              {{256, 256}, 19.6},  {{512, 512, 512}, 147.0}, {{128, 128, 128}, 9.8}};
  const double base = static_cast<double>(nn::MlpShape{20, {50, 50}, 1}.parameter_count());
  bool pass = base == 3651;
  std::ostringstream detail;
  detail << "baseline [50,50] = " << base << " parameters;";
  for (const auto& r : rows) {
    const auto count = nn::MlpShape{20, r.hidden, 1}.parameter_count();
    const double ratio = static_cast<double>(count) / base;
    const bool ok = std::abs(std::round(ratio * 10) / 10 - r.printed) < 1e-9;
    pass = pass && ok;
    detail << ' ' << count << '=' << fmt("%.2f", ratio) << "x" << (ok ? "" : "(MISMATCH)");
  }
  return {pass, detail.str()};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "criterion number 1-11 (repeatable; default all)")
      ->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "gradient correctness", gradients},
      {2, "GAE oracle", gae_oracle},
      {3, "SAC convergence", [] { return convergence(train::Algorithm::Sac, -200, 8, 60); }},
      {4, "PPO convergence", [] { return convergence(train::Algorithm::Ppo, -250, 7, 300); }},
      {5, "TD3 convergence", [] { return convergence(train::Algorithm::Td3, -300, 6, 0); }},
      {6, "backend equivalence", backend_equivalence},
      {7, "determinism", determinism},
      {8, "checkpoint round trip and runtime forward", checkpoint_and_runtime},
      {9, "zero-allocation inference", zero_allocation},
      {10, "IQM suite", iqm_suite},
      {11, "parameter counts", parameter_counts},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
