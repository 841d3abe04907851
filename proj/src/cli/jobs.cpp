#include "fastrl/cli/jobs.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fastrl/deploy/inference.hpp"
#include "json.hpp"

namespace fastrl::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + p.string());
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ordered_json eval_point_json(const train::EvalPoint& p) {
  ordered_json j;
  j["step"] = p.step;
  j["returns"] = p.returns;
  j["elapsed_seconds"] = p.elapsed_seconds;
  return j;
}

void run_one_seed(const TrainJob& job, std::uint64_t seed) {
  auto cfg = job.config;
  cfg.seed = seed;
  const fs::path dir = seed_dir(job.out_dir, seed);
  fs::create_directories(dir);
  write_text(dir / "config.txt", cfg.dump());

  std::ofstream evals(dir / "evaluations.jsonl", std::ios::trunc);
  if (!evals) throw std::runtime_error("cannot write " + (dir / "evaluations.jsonl").string());
  deploy::PolicyCheckpoint policy;
  auto record = train::train(cfg, &policy, [&](const train::EvalPoint& p) {
    evals << eval_point_json(p).dump() << '\n';
    evals.flush();
  });
  evals.close();

  deploy::save_checkpoint(policy, dir / "actor.trlc");
  deploy::save_checkpoint_json(policy, dir / "actor.json");
  record.checkpoint = "actor.trlc";

  ordered_json r;
  r["seed"] = seed;
  r["algorithm"] = std::string(train::to_string(cfg.algorithm));
  r["env"] = cfg.env;
  r["backend"] = std::string(to_string(cfg.backend));
  r["iterations"] = record.iterations;
  r["env_steps"] = record.env_steps;
  r["evaluations"] = record.evaluations.size();
  r["final_iqm"] = record.final_iqm().mean;
  r["final_iqm_std"] = record.final_iqm().stddev;
  r["train_seconds"] = record.train_seconds;
  r["total_seconds"] = record.total_seconds;
  r["evaluations_file"] = "evaluations.jsonl";
  r["checkpoint"] = record.checkpoint;
  r["config_file"] = "config.txt";
  write_text(dir / "record.json", r.dump(2) + "\n");
}

ordered_json aggregate_json(const Aggregate& a, const train::TrainRunConfig& cfg) {
  ordered_json j;
  j["algorithm"] = std::string(train::to_string(cfg.algorithm));
  j["env"] = cfg.env;
  j["backend"] = std::string(to_string(cfg.backend));
  j["float_width"] = sizeof(float) * 8;
  j["host"] = host_description();
  j["seeds"] = a.seeds;
  j["final_seed_iqm"] = a.final_seed_iqm;
  j["train_seconds"] = {{"mean", a.train_seconds.mean}, {"std", a.train_seconds.stddev}};
  j["total_seconds"] = {{"mean", a.total_seconds.mean}, {"std", a.total_seconds.stddev}};
  ordered_json curve = ordered_json::array();
  for (const auto& p : a.curve)
    curve.push_back({{"step", p.step},
                     {"pooled_iqm", p.pooled_iqm},
                     {"pooled_iqm_std", p.pooled_iqm_std},
                     {"seed_iqm_mean", p.seed_iqm_mean},
                     {"seed_iqm_std", p.seed_iqm_std}});
  j["curve"] = std::move(curve);
  return j;
}

std::string curve_csv(const Aggregate& a) {
  std::ostringstream out;
  out.precision(17);
  out << "step,pooled_iqm,pooled_iqm_std,seed_iqm_mean,seed_iqm_std\n";
  for (const auto& p : a.curve)
    out << p.step << ',' << p.pooled_iqm << ',' << p.pooled_iqm_std << ',' << p.seed_iqm_mean << ','
        << p.seed_iqm_std << '\n';
  return out.str();
}

double percentile(std::vector<double> sorted, double q) {
  std::sort(sorted.begin(), sorted.end());
  const auto idx = static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1) + 0.5);
  return sorted[std::min(idx, sorted.size() - 1)];
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(std::string_view spec) {
  std::vector<std::uint64_t> seeds;
  auto num = [&](std::string_view s) {
    std::size_t used = 0;
    const std::string str(s);
    unsigned long long v = 0;
    try {
      v = std::stoull(str, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (str.empty() || used != str.size() || str.front() == '-')
      throw std::invalid_argument("invalid seed '" + str + "' in seed list");
    return static_cast<std::uint64_t>(v);
  };
  std::string_view rest = spec;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto item = rest.substr(0, comma);
    if (const auto dots = item.find(".."); dots != std::string_view::npos) {
      const auto lo = num(item.substr(0, dots)), hi = num(item.substr(dots + 2));
      if (hi < lo) throw std::invalid_argument("empty seed range '" + std::string(item) + "'");
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    } else if (!item.empty()) {
      seeds.push_back(num(item));
    }
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return seeds;
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FASTRL_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1, omp_get_max_threads());
}

std::string host_description() {
  std::string cpu = "unknown cpu";
  std::ifstream info("/proc/cpuinfo");
  for (std::string line; std::getline(info, line);)
    if (line.rfind("model name", 0) == 0) {
      cpu = line.substr(line.find(':') + 2);
      break;
    }
  #if defined(__clang__)
  const std::string compiler = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  const std::string compiler = std::string("gcc ") + __VERSION__;
#else
  const std::string compiler = "unknown compiler";
#endif
  return cpu + "; " + std::to_string(std::thread::hardware_concurrency()) + " hardware threads; " + compiler;
}

fs::path seed_dir(const fs::path& out_dir, std::uint64_t seed) { return out_dir / ("seed_" + std::to_string(seed)); }

TrainJobResult run_train_jobs(const TrainJob& job) {
  if (job.seeds.empty()) throw std::invalid_argument("no seeds given");
  job.config.validate();
  fs::create_directories(job.out_dir);
  auto first = job.config;
  first.seed = job.seeds.front();
  write_text(job.out_dir / "config.txt", first.dump());

  TrainJobResult result;
  const int n = static_cast<int>(job.seeds.size());
  const int workers = std::min(resolve_workers(job.workers), n);
  std::vector<std::string> errors(job.seeds.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (int i = 0; i < n; ++i) {
    try {
      run_one_seed(job, job.seeds[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
#pragma omp critical(fastrl_progress)
    if (!job.quiet) {
      std::fprintf(stderr, "seed %llu %s\n", static_cast<unsigned long long>(job.seeds[i]),
                   errors[i].empty() ? "done" : ("failed: " + errors[i]).c_str());
    }
  }
  std::vector<SeedRun> runs;
  for (std::size_t i = 0; i < job.seeds.size(); ++i) {
    if (!errors[i].empty()) {
      result.failed_seeds.push_back(job.seeds[i]);
      result.errors.push_back(errors[i]);
    } else {
      runs.push_back(load_seed_run(seed_dir(job.out_dir, job.seeds[i])));
    }
  }
  if (!runs.empty()) {
    const auto agg = compute_aggregate(runs);
    write_text(job.out_dir / "aggregate.json", aggregate_json(agg, job.config).dump(2) + "\n");
    write_text(job.out_dir / "iqm_curve.csv", curve_csv(agg));
  }
  return result;
}

SeedRun load_seed_run(const fs::path& dir) {
  SeedRun run;
  const auto record = nlohmann::json::parse(read_text(dir / "record.json"));
  run.seed = record.at("seed").get<std::uint64_t>();
  run.train_seconds = record.at("train_seconds").get<double>();
  run.total_seconds = record.at("total_seconds").get<double>();
  run.iterations = record.at("iterations").get<std::uint64_t>();
  std::ifstream in(dir / record.at("evaluations_file").get<std::string>());
  if (!in) throw std::runtime_error("missing evaluations file in " + dir.string());
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    train::EvalPoint p;
    p.step = j.at("step").get<std::uint64_t>();
    p.returns = j.at("returns").get<std::vector<double>>();
    p.elapsed_seconds = j.at("elapsed_seconds").get<double>();
    run.evaluations.push_back(std::move(p));
  }
  return run;
}

Aggregate compute_aggregate(const std::vector<SeedRun>& runs) {
  if (runs.empty()) throw std::invalid_argument("compute_aggregate: no runs");
  Aggregate a;
  std::vector<double> train_s, total_s;
  for (const auto& r : runs) {
    if (r.evaluations.size() != runs.front().evaluations.size())
      throw std::invalid_argument("compute_aggregate: runs have different evaluation schedules");
    a.seeds.push_back(r.seed);
    train_s.push_back(r.train_seconds);
    total_s.push_back(r.total_seconds);
    a.final_seed_iqm.push_back(train::iqm(r.evaluations.back().returns).mean);
  }
  for (std::size_t k = 0; k < runs.front().evaluations.size(); ++k) {
    AggregatePoint p;
    p.step = runs.front().evaluations[k].step;
    std::vector<double> pooled, per_seed;
    for (const auto& r : runs) {
      if (r.evaluations[k].step != p.step)
        throw std::invalid_argument("compute_aggregate: runs have different evaluation schedules");
      pooled.insert(pooled.end(), r.evaluations[k].returns.begin(), r.evaluations[k].returns.end());
      per_seed.push_back(train::iqm(r.evaluations[k].returns).mean);
    }
    const auto pi = train::iqm(pooled);
    const auto ps = train::mean_std(per_seed);
    p.pooled_iqm = pi.mean;
    p.pooled_iqm_std = pi.stddev;
    p.seed_iqm_mean = ps.mean;
    p.seed_iqm_std = ps.stddev;
    a.curve.push_back(p);
  }
  a.train_seconds = train::mean_std(train_s);
  a.total_seconds = train::mean_std(total_s);
  return a;
}

Aggregate load_aggregate(const fs::path& out_dir) {
  const auto j = nlohmann::json::parse(read_text(out_dir / "aggregate.json"));
  Aggregate a;
  a.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  a.final_seed_iqm = j.at("final_seed_iqm").get<std::vector<double>>();
  a.train_seconds = {j.at("train_seconds").at("mean").get<double>(), j.at("train_seconds").at("std").get<double>()};
  a.total_seconds = {j.at("total_seconds").at("mean").get<double>(), j.at("total_seconds").at("std").get<double>()};
  for (const auto& c : j.at("curve"))
    a.curve.push_back({c.at("step").get<std::uint64_t>(), c.at("pooled_iqm").get<double>(),
                       c.at("pooled_iqm_std").get<double>(), c.at("seed_iqm_mean").get<double>(),
                       c.at("seed_iqm_std").get<double>()});
  return a;
}

std::vector<BenchCell> run_bench(const BenchJob& job) {
  if (job.repetitions == 0) throw std::invalid_argument("bench needs at least one repetition");
  // Cartesian product of the grid.
  std::vector<std::vector<std::pair<std::string, std::string>>> combos{{}};
  for (const auto& [key, values] : job.grid) {
    if (values.empty()) throw std::invalid_argument("grid key '" + key + "' has no values");
    std::vector<std::vector<std::pair<std::string, std::string>>> next;
    for (const auto& c : combos)
      for (const auto& v : values) {
        auto e = c;
        e.emplace_back(key, v);
        next.push_back(std::move(e));
      }
    combos = std::move(next);
  }
  std::vector<BenchCell> cells;
  for (const auto& combo : combos) {
    BenchCell cell;
    cell.settings = combo;
    auto cfg = job.config;
    for (const auto& [k, v] : combo) cfg.set(k, v);
    cfg.validate();
    const int n = static_cast<int>(job.repetitions);
    cell.train_seconds.resize(n);
    cell.total_seconds.resize(n);
    cell.final_iqm.resize(n);
    std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, std::min(job.workers, n)))
    for (int i = 0; i < n; ++i) {
      try {
        auto c = cfg;
        c.seed = cfg.seed + static_cast<std::uint64_t>(i);
        const auto rec = train::train(c);
        cell.train_seconds[i] = rec.train_seconds;
        cell.total_seconds[i] = rec.total_seconds;
        cell.final_iqm[i] = rec.final_iqm().mean;
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
    for (const auto& e : errors)
      if (!e.empty()) throw std::runtime_error("bench run failed: " + e);
    cells.push_back(std::move(cell));
  }
  return cells;
}

std::string bench_report(const BenchJob& job, const std::vector<BenchCell>& cells) {
  ordered_json j;
  j["host"] = host_description();
  j["float_width"] = sizeof(float) * 8;
  j["algorithm"] = std::string(train::to_string(job.config.algorithm));
  j["total_steps"] = job.config.total_steps;
  j["repetitions"] = job.repetitions;
  ordered_json rows = ordered_json::array();
  for (const auto& c : cells) {
    ordered_json row;
    ordered_json settings = ordered_json::object();
    for (const auto& [k, v] : c.settings) settings[k] = v;
    row["settings"] = settings;
    const auto tr = train::mean_std(c.train_seconds);
    const auto to = train::mean_std(c.total_seconds);
    row["train_seconds"] = {{"mean", tr.mean}, {"std", tr.stddev}};
    row["total_seconds"] = {{"mean", to.mean}, {"std", to.stddev}};
    row["final_iqm"] = c.final_iqm;
    rows.push_back(std::move(row));
  }
  j["results"] = std::move(rows);
  return j.dump(2);
}

LatencyStats bench_inference(const deploy::PolicyCheckpoint& ckpt, Backend backend, std::size_t calls,
                             std::uint64_t seed) {
  if (calls == 0) throw std::invalid_argument("bench_inference: calls must be positive");
  deploy::InferenceRuntime<float> rt(ckpt, backend);
  Prng rng(seed);
  std::vector<float> obs(rt.input_dim());
  for (auto& x : obs) x = rng.uniform<float>(-1.f, 1.f);
  std::vector<double> ns(calls);
  float sink = 0;
  using Clock = std::chrono::steady_clock;
  for (std::size_t i = 0; i < calls; ++i) {
    obs[i % obs.size()] = static_cast<float>(i % 17) * 0.05f - 0.4f;
    const auto t0 = Clock::now();
    sink += rt.forward(obs)[0];
    ns[i] = std::chrono::duration<double, std::nano>(Clock::now() - t0).count();
  }
  volatile float keep = sink;
  (void)keep;
  LatencyStats s;
  s.backend = std::string(to_string(backend));
  s.calls = calls;
  s.mean_ns = train::mean_std(ns).mean;
  s.p50_ns = percentile(ns, 0.5);
  s.p99_ns = percentile(ns, 0.99);
  s.max_ns = *std::max_element(ns.begin(), ns.end());
  return s;
}

std::vector<double> evaluate_checkpoint(const deploy::PolicyCheckpoint& ckpt, std::size_t episodes, std::uint64_t seed,
                                        Backend backend) {
  if (ckpt.input_dim != env::Pendulum::kObservationDim || ckpt.output_dim() != env::Pendulum::kActionDim)
    throw std::invalid_argument("checkpoint shape does not fit the pendulum environment");
  deploy::InferenceRuntime<float> rt(ckpt, backend);
  const train::BatchPolicy policy = [&rt](ConstMatrixView<float> obs, MatrixView<float> actions) {
    for (std::size_t b = 0; b < obs.rows(); ++b) rt.act(obs.row(b), actions.row(b));
  };
  return train::evaluate_policy(policy, episodes, train::stream(seed, train::Stream::Eval));
}

deploy::PolicyCheckpoint export_run(const fs::path& run_dir, const fs::path& out) {
  fs::path dir = run_dir;
  if (!fs::exists(dir / "actor.trlc")) {
    // A train output directory: use its lowest seed.
    std::vector<fs::path> seeds;
    if (fs::is_directory(dir))
      for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory() && e.path().filename().string().rfind("seed_", 0) == 0 && fs::exists(e.path() / "actor.trlc"))
          seeds.push_back(e.path());
    if (seeds.empty()) throw std::runtime_error("no trained policy found in " + run_dir.string());
    std::sort(seeds.begin(), seeds.end(), [](const fs::path& a, const fs::path& b) {
      return std::stoull(a.filename().string().substr(5)) < std::stoull(b.filename().string().substr(5));
    });
    dir = seeds.front();
  }
  const auto ckpt = deploy::load_checkpoint(dir / "actor.trlc");
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  deploy::save_checkpoint(ckpt, out);
  auto json_path = out;
  json_path.replace_extension(".json");
  deploy::save_checkpoint_json(ckpt, json_path);

  const auto reloaded = deploy::load_checkpoint(out);
  if (!(reloaded == ckpt)) throw std::runtime_error("exported checkpoint does not reload identically");
  auto net = ckpt.to_mlp<float>(Backend::Fused);
  deploy::InferenceRuntime<float> rt(reloaded, Backend::Fused);
  Prng rng(0);
  Matrix<float> x(1, ckpt.input_dim);
  for (int i = 0; i < 256; ++i) {
    for (auto& v : x.flat()) v = rng.uniform<float>(-2.f, 2.f);
    const auto ref = net.forward(x, false);
    const auto got = rt.forward(x.flat());
    for (std::size_t j = 0; j < got.size(); ++j)
      if (got[j] != ref(0, j)) throw std::runtime_error("exported policy forward pass differs from the training stack");
  }
  return ckpt;
}

}  // namespace fastrl::cli
