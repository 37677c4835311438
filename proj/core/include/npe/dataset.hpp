#pragma once

#include "npe/skeleton.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace npe {

using PoseFeatures = Eigen::Matrix<float, static_cast<int>(kPoseDim), 1>;

inline constexpr float kStdFloor = 1e-6f;

/// Per-feature mean and population standard deviation.
struct NormStats {
  std::array<float, kPoseDim> mean{};
  std::array<float, kPoseDim> std{};

  /// FNV-1a over the little-endian bytes of mean then std.
  std::uint64_t hash() const;

  friend bool operator==(const NormStats&, const NormStats&) = default;
};

/// Single-pass (Welford) statistics; std floored at kStdFloor. Needs >= 2 poses.
NormStats compute_stats(std::span<const PoseVector> poses);
NormStats compute_stats(std::span<const CanonicalClip> clips);

PoseFeatures normalize(const PoseVector& pose, const NormStats& stats);
PoseVector denormalize(const PoseFeatures& features, const NormStats& stats);

/// Normalizes the coordinates of the given joints with their own feature stats.
Eigen::VectorXf normalize_targets(std::span<const std::size_t> joints, std::span<const Eigen::Vector3f> positions,
                                  const NormStats& stats);

/// Largest per-frame displacement of any joint across the clip, in meters.
double max_frame_displacement(const CanonicalClip& clip);

enum class Split : std::uint8_t { Train, Validation };

struct PoseDataset {
  std::vector<CanonicalClip> clips;
  std::vector<Split> split;  // one tag per clip
  NormStats stats;

  std::size_t pose_count() const;
  std::vector<std::size_t> clip_indices(Split which) const;
  /// All poses of one split, clip order.
  std::vector<PoseVector> poses(Split which) const;
};

struct DatasetOptions {
  double validation_fraction = 0.05;
  double jitter_threshold = 0.3;
  std::uint64_t seed = 0;
};

struct DatasetBuildReport {
  std::size_t clips_in = 0;
  std::size_t dropped_jittery = 0;
  std::size_t dropped_empty = 0;
};

/// Drops jittery clips, splits the rest by whole clips (seeded) and computes
/// stats from the training split only.
PoseDataset build_dataset(std::vector<CanonicalClip> clips, const DatasetOptions& options,
                          DatasetBuildReport* report = nullptr);

struct IngestFailure {
  std::string file;
  std::string message;
};

struct IngestResult {
  PoseDataset dataset;
  DatasetBuildReport report;
  std::vector<std::string> files;  // parsed and retargeted, sorted by name
  std::vector<IngestFailure> failures;
  std::size_t frames_total = 0;  // frames of every retargeted clip, dropped ones included
};

/// Parses every *.bvh file in `dir` (sorted by file name), retargets it and
/// builds the dataset. Files that fail are reported and skipped; throws
/// EmptyInput when nothing could be ingested.
IngestResult ingest_bvh_directory(const std::filesystem::path& dir, const RetargetMapping& mapping,
                                  const DatasetOptions& options, const RetargetOptions& retarget_options = {});

struct TrainingPair {
  PoseVector x;
  PoseVector x_prime;
  std::size_t clip = 0;
  std::size_t frame = 0;
  std::size_t frame_prime = 0;
};

/// Uniform over eligible clips of the split (>= 2 poses), then uniform over
/// ordered frame pairs with distinct indices.
TrainingPair sample_training_pair(const PoseDataset& dataset, std::mt19937_64& rng, Split which = Split::Train);

/// Binary "NPK1" layout, little-endian:
///   magic "NPK1", u32 pose count, u32 feature count (63),
///   f32[63] mean, f32[63] std,
///   u32 clip count, per clip {u32 first pose, u32 length, u32 flags (bit 0 = validation), f32 frame time},
///   f32 pose block (pose count x 63).
std::vector<std::uint8_t> serialize_dataset(const PoseDataset& dataset);
PoseDataset deserialize_dataset(std::span<const std::uint8_t> bytes);
void save_dataset(const PoseDataset& dataset, const std::filesystem::path& path);
PoseDataset load_dataset(const std::filesystem::path& path);

}  // namespace npe
