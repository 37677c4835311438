#pragma once

#include "npe/fabrik.hpp"
#include "npe/solver.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace npe {

struct BenchRow {
  std::string method;  // "FABRIK" or "Ours"
  std::size_t effectors = 0;
  bool post_process = false;
  std::size_t iterations = 0;
  double mean_ms = 0.0;  // mean over cases of the fastest repeat
  double std_ms = 0.0;
  std::optional<double> footprint_kb;  // neural rows only, 1 kB = 1000 bytes
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::size_t iterations = 0;
  std::size_t repeats = 1;
  std::uint64_t seed = 0;

  const BenchRow* find(const std::string& method, std::size_t effectors, bool post_process) const;
  /// Tab-separated, header line first, stable column order.
  std::string to_tsv() const;
  std::string to_table() const;
};

struct BenchOptions {
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  FabrikConfig fabrik;
  std::string two_target_solver = "hands";
  std::vector<std::string> five_target_solvers = {"hands", "feet", "head"};
  // Each case is timed this many times per row and the fastest run kept.
  std::size_t repeats = 5;
  std::size_t warmup = 20;
};

/// One benchmark case: a held-out start pose and targets taken from another
/// frame of the same clip.
struct BenchCase {
  PoseVector pose;
  PoseVector target_pose;
};

/// Cases drawn from the validation split (the training split when no clip is held out).
std::vector<BenchCase> sample_bench_cases(const PoseDataset& dataset, std::size_t count, std::uint64_t seed);

std::vector<TargetSpec> target_specs_for(const ModelSet& models, const std::vector<std::string>& solver_names,
                                         const PoseVector& target_pose);

/// FABRIK(2), Ours(2) with and without post-processing, FABRIK(5) and Ours(5)
/// with and without post-processing. Rows are interleaved case by case so
/// drift hits all of them alike; everything runs on the calling thread.
BenchReport run_bench(const ModelSet& models, const std::vector<BenchCase>& cases, const BenchOptions& options);

struct TimingSpread {
  double mean_ms = 0.0;
  double std_ms = 0.0;
  std::size_t samples = 0;
};

/// Neural 2-target solve cost per case: each case is timed `repeats` times and
/// its fastest run kept, which strips scheduler and timer noise.
TimingSpread neural_runtime_spread(const ModelSet& models, const std::vector<BenchCase>& cases,
                                   const std::string& solver_name, std::size_t repeats);

}  // namespace npe
