#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fastrl/train/train.hpp"

namespace fastrl::cli {

/// Parses "0..9", "1,4,7" or mixtures like "0..2,10". Ranges are inclusive.
std::vector<std::uint64_t> parse_seed_list(std::string_view spec);

/// Worker count: the explicit value if positive, else FASTRL_WORKERS, else
/// the OpenMP default.
int resolve_workers(int requested);

/// Compiler, CPU model and thread count, for reports.
std::string host_description();

struct TrainJob {
  train::TrainRunConfig config;  // seed field is replaced per run
  std::vector<std::uint64_t> seeds;
  std::filesystem::path out_dir;
  int workers = 0;
  bool quiet = false;
};

struct TrainJobResult {
  std::vector<std::uint64_t> failed_seeds;
  std::vector<std::string> errors;
  bool ok() const { return failed_seeds.empty(); }
};

/// Layout written under out_dir:
///   config.txt                  resolved configuration (seed of the first run)
///   seed_<s>/config.txt         resolved configuration of that run
///   seed_<s>/evaluations.jsonl  one {"step","returns","elapsed_seconds"} per line
///   seed_<s>/record.json        iteration count, timings, file references
///   seed_<s>/actor.trlc         final policy (+ actor.json debug dump)
///   aggregate.json, iqm_curve.csv
/// Seeds run in parallel. An empty seed list is rejected before anything is written.
TrainJobResult run_train_jobs(const TrainJob& job);

std::filesystem::path seed_dir(const std::filesystem::path& out_dir, std::uint64_t seed);

/// One run as read back from its directory.
struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<train::EvalPoint> evaluations;
  double train_seconds = 0;
  double total_seconds = 0;
  std::uint64_t iterations = 0;
};
SeedRun load_seed_run(const std::filesystem::path& dir);

struct AggregatePoint {
  std::uint64_t step = 0;
  double pooled_iqm = 0;      // IQM over all episodes of all seeds
  double pooled_iqm_std = 0;
  double seed_iqm_mean = 0;   // mean and std over seeds of per-seed IQMs
  double seed_iqm_std = 0;
};

struct Aggregate {
  std::vector<std::uint64_t> seeds;
  std::vector<AggregatePoint> curve;
  std::vector<double> final_seed_iqm;
  train::MeanStd train_seconds;
  train::MeanStd total_seconds;
};

/// Requires all runs to share evaluation steps.
Aggregate compute_aggregate(const std::vector<SeedRun>& runs);
/// Reads aggregate.json back.
Aggregate load_aggregate(const std::filesystem::path& out_dir);

struct BenchJob {
  train::TrainRunConfig config;
  /// Each entry is key -> values; runs cover the cartesian product.
  std::vector<std::pair<std::string, std::vector<std::string>>> grid;
  std::size_t repetitions = 10;
  int workers = 1;  // timing runs default to one at a time
};

struct BenchCell {
  std::vector<std::pair<std::string, std::string>> settings;
  std::vector<double> train_seconds;
  std::vector<double> total_seconds;
  std::vector<double> final_iqm;
};

std::vector<BenchCell> run_bench(const BenchJob& job);
/// JSON report including host description and float width.
std::string bench_report(const BenchJob& job, const std::vector<BenchCell>& cells);

struct LatencyStats {
  std::string backend;
  std::size_t calls = 0;
  double mean_ns = 0;
  double p50_ns = 0;
  double p99_ns = 0;
  double max_ns = 0;
};

/// Times single-observation forward passes of the static runtime.
LatencyStats bench_inference(const deploy::PolicyCheckpoint& ckpt, Backend backend, std::size_t calls,
                             std::uint64_t seed = 0);

/// Greedy returns of a checkpoint through the static runtime.
std::vector<double> evaluate_checkpoint(const deploy::PolicyCheckpoint& ckpt, std::size_t episodes, std::uint64_t seed,
                                        Backend backend = Backend::Fused);

/// Copies the final policy of a run directory (a seed directory, or a
/// train output directory whose first seed is used) to `out` plus a JSON
/// dump, then reloads it and checks a batch of forward passes against the
/// training-stack network. Returns the written checkpoint.
deploy::PolicyCheckpoint export_run(const std::filesystem::path& run_dir, const std::filesystem::path& out);

}  // namespace fastrl::cli
