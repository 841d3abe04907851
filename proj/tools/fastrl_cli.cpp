// fastrl: train, evaluate, benchmark and export policies.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fastrl/cli/jobs.hpp"
#include "fastrl/deploy/checkpoint.hpp"

using namespace fastrl;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct ConfigFlags {
  std::string algo;
  std::string env;
  std::string config_file;
  std::vector<std::string> sets;

  void add_to(CLI::App* app) {
    app->add_option("--algo", algo, "sac, td3 or ppo (default sac, or the config file's)");
    app->add_option("--env", env, "environment (pendulum)");
    app->add_option("--config", config_file, "key = value config file; flags override it")->check(CLI::ExistingFile);
    app->add_option("--set", sets, "override one config key, key=value (repeatable)");
  }

  train::TrainRunConfig resolve() const {
    train::TrainRunConfig cfg;
    if (!config_file.empty()) {
      cfg = train::TrainRunConfig::parse(read_file(config_file));
      if (!algo.empty() && train::parse_algorithm(algo) != cfg.algorithm)
        throw std::invalid_argument("--algo " + algo + " conflicts with the config file's algorithm");
    } else {
      cfg = train::TrainRunConfig::defaults(train::parse_algorithm(algo.empty() ? "sac" : algo));
    }
    if (!env.empty()) cfg.set("env", env);
    for (const auto& s : sets) {
      const auto [k, v] = train::split_assignment(s);
      cfg.set(k, v);
    }
    cfg.validate();
    return cfg;
  }
};

Backend backend_flag(const std::string& s) {
  const auto b = parse_backend(s);
  if (!b) throw std::invalid_argument("unknown backend '" + s + "'");
  return *b;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fastrl: SAC, TD3 and PPO for small continuous-control tasks"};
  app.require_subcommand(1);

  auto* train_cmd = app.add_subcommand("train", "train one run per seed and aggregate the results");
  ConfigFlags train_flags;
  train_flags.add_to(train_cmd);
  std::string seeds = "0";
  std::string out_dir;
  int workers = 0;
  bool quiet = false;
  train_cmd->add_option("--seeds", seeds, "seed list, e.g. 0..9 or 1,4,7")->capture_default_str();
  train_cmd->add_option("--out", out_dir, "output directory")->required();
  train_cmd->add_option("--workers", workers, "parallel seeds (default: FASTRL_WORKERS, else all cores)");
  train_cmd->add_flag("--quiet", quiet, "no per-seed progress on stderr");

  auto* bench_cmd = app.add_subcommand("bench", "time training runs over a settings grid, or time inference");
  ConfigFlags bench_flags;
  bench_flags.add_to(bench_cmd);
  std::vector<std::string> grid;
  std::size_t repetitions = 10;
  int bench_workers = 1;
  std::string bench_out;
  std::string inference_ckpt;
  std::size_t calls = 1'000'000;
  bench_cmd->add_option("--grid", grid, "key=v1,v2,... (repeatable; runs cover the product)");
  bench_cmd->add_option("--repetitions", repetitions, "runs per grid cell")->capture_default_str();
  bench_cmd->add_option("--workers", bench_workers, "parallel runs (default 1 for clean timings)")
      ->capture_default_str();
  bench_cmd->add_option("--out", bench_out, "write the JSON report here instead of stdout");
  bench_cmd->add_option("--inference", inference_ckpt, "time forward passes of this checkpoint instead")
      ->check(CLI::ExistingFile);
  bench_cmd->add_option("--calls", calls, "forward passes per backend with --inference")->capture_default_str();

  auto* eval_cmd = app.add_subcommand("eval", "greedy evaluation of a checkpoint");
  std::string ckpt_path;
  std::size_t episodes = 100;
  std::uint64_t eval_seed = 0;
  std::string eval_backend = "fused";
  eval_cmd->add_option("--ckpt", ckpt_path, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--episodes", episodes, "episodes")->capture_default_str();
  eval_cmd->add_option("--seed", eval_seed, "seed for initial states")->capture_default_str();
  eval_cmd->add_option("--backend", eval_backend, "generic or fused")->capture_default_str();

  auto* export_cmd = app.add_subcommand("export", "export the final policy of a run");
  std::string run_dir, export_out;
  export_cmd->add_option("--run", run_dir, "seed directory, or train output directory (first seed)")->required();
  export_cmd->add_option("--out", export_out, "checkpoint file to write (a .json dump is written next to it)")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      cli::TrainJob job;
      job.config = train_flags.resolve();
      job.seeds = cli::parse_seed_list(seeds);
      job.out_dir = out_dir;
      job.workers = workers;
      job.quiet = quiet;
      const auto result = cli::run_train_jobs(job);
      if (!result.ok()) {
        for (std::size_t i = 0; i < result.failed_seeds.size(); ++i)
          std::fprintf(stderr, "seed %llu failed: %s\n", static_cast<unsigned long long>(result.failed_seeds[i]),
                       result.errors[i].c_str());
        return 1;
      }
      const auto agg = cli::load_aggregate(job.out_dir);
      const auto& last = agg.curve.back();
      std::printf("%zu seeds, final IQM %.2f (pooled), %.2f +- %.2f over seeds; train %.3f +- %.3f s\n",
                  agg.seeds.size(), last.pooled_iqm, last.seed_iqm_mean, last.seed_iqm_std, agg.train_seconds.mean,
                  agg.train_seconds.stddev);
    } else if (*bench_cmd) {
      std::string report;
      if (!inference_ckpt.empty()) {
        const auto ckpt = deploy::load_checkpoint(inference_ckpt);
        std::ostringstream out;
        out << "{\n  \"host\": \"" << cli::host_description() << "\",\n  \"float_width\": 32,\n  \"latency\": [\n";
        for (const Backend b : {Backend::Generic, Backend::Fused}) {
          const auto s = cli::bench_inference(ckpt, b, calls);
          out << "    {\"backend\": \"" << s.backend << "\", \"calls\": " << s.calls << ", \"mean_ns\": " << s.mean_ns
              << ", \"p50_ns\": " << s.p50_ns << ", \"p99_ns\": " << s.p99_ns << ", \"max_ns\": " << s.max_ns << "}"
              << (b == Backend::Generic ? ",\n" : "\n");
        }
        out << "  ]\n}";
        report = out.str();
      } else {
        cli::BenchJob job;
        job.config = bench_flags.resolve();
        job.repetitions = repetitions;
        job.workers = bench_workers;
        for (const auto& g : grid) {
          const auto [key, values] = train::split_assignment(g);
          std::vector<std::string> list;
          std::stringstream ss(values);
          for (std::string v; std::getline(ss, v, ',');)
            if (!v.empty()) list.push_back(v);
          job.grid.emplace_back(key, std::move(list));
        }
        report = cli::bench_report(job, cli::run_bench(job));
      }
      if (bench_out.empty()) {
        std::cout << report << '\n';
      } else {
        std::ofstream(bench_out) << report << '\n';
      }
    } else if (*eval_cmd) {
      const auto ckpt = deploy::load_checkpoint(ckpt_path);
      const auto returns = cli::evaluate_checkpoint(ckpt, episodes, eval_seed, backend_flag(eval_backend));
      const auto q = train::iqm(returns);
      const auto m = train::mean_std(returns);
      std::printf("episodes %zu  iqm %.2f (std %.2f)  mean %.2f (std %.2f)\n", returns.size(), q.mean, q.stddev, m.mean,
                  m.stddev);
    } else if (*export_cmd) {
      const auto ckpt = cli::export_run(run_dir, export_out);
      std::printf("wrote %s: %zu inputs, %zu outputs, %zu parameters\n", export_out.c_str(),
                  static_cast<std::size_t>(ckpt.input_dim), ckpt.output_dim(), ckpt.parameters.size());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
