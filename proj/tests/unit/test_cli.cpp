#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fastrl/cli/jobs.hpp"
#include "fastrl/deploy/inference.hpp"
#include "json.hpp"

using namespace fastrl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("fastrl_test_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

train::TrainRunConfig small_sac() {
  auto c = train::TrainRunConfig::defaults(train::Algorithm::Sac);
  c.total_steps = 200;
  c.eval_interval = 100;
  c.eval_episodes = 6;
  c.warmup_steps = 50;
  c.sac.batch_size = 16;
  return c;
}

cli::TrainJob small_job(const fs::path& out) {
  cli::TrainJob job;
  job.config = small_sac();
  job.seeds = {3, 5, 8};
  job.out_dir = out;
  job.workers = 2;
  job.quiet = true;
  return job;
}

// Per-seed files with wall-clock fields removed.
std::string without_clock(const fs::path& dir) {
  std::string out;
  std::ifstream ev(dir / "evaluations.jsonl");
  for (std::string line; std::getline(ev, line);) {
    auto j = nlohmann::json::parse(line);
    j.erase("elapsed_seconds");
    out += j.dump() + "\n";
  }
  auto rec = nlohmann::json::parse(slurp(dir / "record.json"));
  rec.erase("train_seconds");
  rec.erase("total_seconds");
  return out + rec.dump() + slurp(dir / "config.txt") + slurp(dir / "actor.trlc") + slurp(dir / "actor.json");
}

}  // namespace

TEST_CASE("seed lists") {
  CHECK(cli::parse_seed_list("0..9") == std::vector<std::uint64_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  CHECK(cli::parse_seed_list("1,4,7") == std::vector<std::uint64_t>{1, 4, 7});
  CHECK(cli::parse_seed_list("0..2,10") == std::vector<std::uint64_t>{0, 1, 2, 10});
  CHECK(cli::parse_seed_list("5") == std::vector<std::uint64_t>{5});
  CHECK(cli::parse_seed_list("").empty());
  CHECK_THROWS_AS(cli::parse_seed_list("3..1"), std::invalid_argument);
  CHECK_THROWS_AS(cli::parse_seed_list("a"), std::invalid_argument);
  CHECK_THROWS_AS(cli::parse_seed_list("-1"), std::invalid_argument);
  CHECK_THROWS_AS(cli::parse_seed_list("1..x"), std::invalid_argument);
}

TEST_CASE("worker count resolution") {
  CHECK(cli::resolve_workers(3) == 3);
  ::setenv("FASTRL_WORKERS", "5", 1);
  CHECK(cli::resolve_workers(0) == 5);
  ::unsetenv("FASTRL_WORKERS");
  CHECK(cli::resolve_workers(0) >= 1);
}

TEST_CASE("empty seed list writes nothing") {
  TempDir tmp;
  auto job = small_job(tmp.path);
  job.seeds.clear();
  CHECK_THROWS_AS(cli::run_train_jobs(job), std::invalid_argument);
  CHECK_FALSE(fs::exists(tmp.path));
}

TEST_CASE("invalid jobs are rejected") {
  TempDir tmp;
  auto job = small_job(tmp.path);
  job.config.env = "cartpole";
  CHECK_THROWS(cli::run_train_jobs(job));
  CHECK_FALSE(fs::exists(tmp.path));

  fs::create_directories(tmp.path);
  std::ofstream(tmp.path / "file") << "x";
  auto blocked = small_job(tmp.path / "file" / "out");
  CHECK_THROWS(cli::run_train_jobs(blocked));
}

TEST_CASE("train job writes per-seed records and a recomputable aggregate") {
  TempDir tmp;
  const auto job = small_job(tmp.path);
  REQUIRE(cli::run_train_jobs(job).ok());

  CHECK(fs::exists(tmp.path / "config.txt"));
  CHECK(fs::exists(tmp.path / "iqm_curve.csv"));
  std::vector<cli::SeedRun> runs;
  for (const auto s : job.seeds) {
    const auto dir = cli::seed_dir(tmp.path, s);
    for (const char* f : {"config.txt", "evaluations.jsonl", "record.json", "actor.trlc", "actor.json"})
      CHECK_MESSAGE(fs::exists(dir / f), (dir / f).string());
    // Resolved config reproduces the run.
    const auto cfg = train::TrainRunConfig::parse(slurp(dir / "config.txt"));
    CHECK(cfg.seed == s);
    const auto again = train::train(cfg);
    runs.push_back(cli::load_seed_run(dir));
    REQUIRE(again.evaluations.size() == runs.back().evaluations.size());
    for (std::size_t k = 0; k < again.evaluations.size(); ++k) {
      CHECK(again.evaluations[k].step == runs.back().evaluations[k].step);
      CHECK(again.evaluations[k].returns == runs.back().evaluations[k].returns);
    }
  }
  CHECK(runs.front().evaluations.size() == 3);
  CHECK(runs.front().iterations == 151);

  const auto recomputed = cli::compute_aggregate(runs);
  const auto written = cli::load_aggregate(tmp.path);
  CHECK(written.seeds == job.seeds);
  REQUIRE(written.curve.size() == recomputed.curve.size());
  for (std::size_t k = 0; k < written.curve.size(); ++k) {
    CHECK(written.curve[k].step == recomputed.curve[k].step);
    CHECK(std::abs(written.curve[k].pooled_iqm - recomputed.curve[k].pooled_iqm) <= 1e-12);
    CHECK(std::abs(written.curve[k].pooled_iqm_std - recomputed.curve[k].pooled_iqm_std) <= 1e-12);
    CHECK(std::abs(written.curve[k].seed_iqm_mean - recomputed.curve[k].seed_iqm_mean) <= 1e-12);
    CHECK(std::abs(written.curve[k].seed_iqm_std - recomputed.curve[k].seed_iqm_std) <= 1e-12);
  }
  for (std::size_t i = 0; i < runs.size(); ++i)
    CHECK(std::abs(written.final_seed_iqm[i] - recomputed.final_seed_iqm[i]) <= 1e-12);
  CHECK(std::abs(written.train_seconds.mean - recomputed.train_seconds.mean) <= 1e-12);
  CHECK(std::abs(written.total_seconds.stddev - recomputed.total_seconds.stddev) <= 1e-12);

  const auto agg_json = nlohmann::json::parse(slurp(tmp.path / "aggregate.json"));
  CHECK(agg_json.at("float_width") == 32);
  CHECK(agg_json.at("host").get<std::string>().size() > 0);
}

TEST_CASE("rerunning a job reproduces everything but wall-clock fields") {
  TempDir a, b;
  REQUIRE(cli::run_train_jobs(small_job(a.path)).ok());
  auto job = small_job(b.path);
  job.workers = 1;
  REQUIRE(cli::run_train_jobs(job).ok());
  for (const auto s : job.seeds) CHECK(without_clock(cli::seed_dir(a.path, s)) == without_clock(cli::seed_dir(b.path, s)));
  CHECK(slurp(a.path / "config.txt") == slurp(b.path / "config.txt"));
}

TEST_CASE("aggregate requires matching schedules") {
  cli::SeedRun r1, r2;
  r1.evaluations = {{0, {1.0, 2.0}, 0}, {10, {3.0}, 0}};
  r2.evaluations = {{0, {1.0}, 0}};
  CHECK_THROWS_AS(cli::compute_aggregate({r1, r2}), std::invalid_argument);
  r2.evaluations = {{0, {1.0}, 0}, {20, {1.0}, 0}};
  CHECK_THROWS_AS(cli::compute_aggregate({r1, r2}), std::invalid_argument);
  CHECK_THROWS_AS(cli::compute_aggregate({}), std::invalid_argument);
}

TEST_CASE("export carries the torque scale and matches the training stack") {
  TempDir tmp;
  auto job = small_job(tmp.path / "run");
  job.seeds = {2};
  REQUIRE(cli::run_train_jobs(job).ok());

  const auto ckpt = cli::export_run(tmp.path / "run", tmp.path / "policy.trlc");
  REQUIRE(ckpt.action_scale.size() == 1);
  CHECK(ckpt.action_scale[0] == 2.0);
  CHECK(fs::exists(tmp.path / "policy.json"));
  CHECK(slurp(tmp.path / "policy.trlc") == slurp(tmp.path / "run" / "seed_2" / "actor.trlc"));

  // The exported policy reproduces the run's final greedy evaluation.
  const auto run = cli::load_seed_run(cli::seed_dir(tmp.path / "run", 2));
  const auto returns = cli::evaluate_checkpoint(ckpt, job.config.eval_episodes, 2);
  CHECK(returns == run.evaluations.back().returns);

  const auto loaded = deploy::load_checkpoint(tmp.path / "policy.trlc");
  auto net = loaded.to_mlp<float>(Backend::Fused);
  deploy::InferenceRuntime<float> rt(loaded, Backend::Fused);
  Matrix<float> x(1, 3);
  Prng rng(4);
  for (int i = 0; i < 100; ++i) {
    for (auto& v : x.flat()) v = rng.uniform<float>(-1.f, 1.f);
    CHECK(rt.forward(x.flat())[0] == net.forward(x, false)(0, 0));
  }
}

TEST_CASE("export of a missing run fails") {
  TempDir tmp;
  CHECK_THROWS(cli::export_run(tmp.path / "nothing", tmp.path / "p.trlc"));
  fs::create_directories(tmp.path / "empty");
  CHECK_THROWS(cli::export_run(tmp.path / "empty", tmp.path / "p.trlc"));
  CHECK_FALSE(fs::exists(tmp.path / "p.trlc"));
}

TEST_CASE("bench grid of zero-step runs") {
  cli::BenchJob job;
  job.config = train::TrainRunConfig::defaults(train::Algorithm::Sac);
  job.config.total_steps = 0;
  job.config.eval_episodes = 2;
  job.repetitions = 3;
  job.grid = {{"backend", {"generic", "fused"}}, {"sac.batch_size", {"32", "64"}}};
  const auto cells = cli::run_bench(job);
  REQUIRE(cells.size() == 4);
  CHECK(cells[1].settings == std::vector<std::pair<std::string, std::string>>{{"backend", "generic"},
                                                                              {"sac.batch_size", "64"}});
  for (const auto& c : cells) {
    REQUIRE(c.train_seconds.size() == 3);
    for (const double t : c.train_seconds) CHECK(t < 0.05);
  }
  const auto report = nlohmann::json::parse(cli::bench_report(job, cells));
  CHECK(report.at("float_width") == 32);
  CHECK_FALSE(report.at("host").get<std::string>().empty());
  CHECK(report.at("results").size() == 4);
  CHECK(report.at("results")[0].at("train_seconds").contains("std"));

  job.grid = {{"sac.nonsense", {"1"}}};
  CHECK_THROWS(cli::run_bench(job));
  job.grid = {{"backend", {}}};
  CHECK_THROWS(cli::run_bench(job));
}

TEST_CASE("inference latency report") {
  auto cfg = train::TrainRunConfig::defaults(train::Algorithm::Td3);
  cfg.total_steps = 0;
  cfg.eval_episodes = 1;
  deploy::PolicyCheckpoint ckpt;
  train::train(cfg, &ckpt);
  for (const Backend b : {Backend::Generic, Backend::Fused}) {
    const auto s = cli::bench_inference(ckpt, b, 2000);
    CHECK(s.calls == 2000);
    CHECK(s.p50_ns <= s.p99_ns);
    CHECK(s.p99_ns <= s.max_ns);
    CHECK(s.mean_ns > 0);
  }
}
