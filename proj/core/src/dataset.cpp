#include "npe/dataset.hpp"

#include "binary_io.hpp"
#include "npe/config.hpp"
#include "npe/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace npe {

namespace detail {

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_binary_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

}  // namespace detail

std::uint64_t NormStats::hash() const {
  detail::ByteWriter w;
  for (float v : mean) w.f32(v);
  for (float v : std) w.f32(v);
  return detail::fnv1a(w.data());
}

namespace {

struct Welford {
  std::size_t n = 0;
  std::array<double, kPoseDim> mean{};
  std::array<double, kPoseDim> m2{};

  void add(const PoseVector& pose) {
    ++n;
    for (std::size_t i = 0; i < kPoseDim; ++i) {
      const double x = pose.values[i];
      const double delta = x - mean[i];
      mean[i] += delta / static_cast<double>(n);
      m2[i] += delta * (x - mean[i]);
    }
  }

  NormStats finish() const {
    if (n < 2) throw Error(ErrorCode::EmptyInput, "statistics need at least 2 poses, got " + std::to_string(n));
    NormStats stats;
    for (std::size_t i = 0; i < kPoseDim; ++i) {
      stats.mean[i] = static_cast<float>(mean[i]);
      const float sd = static_cast<float>(std::sqrt(m2[i] / static_cast<double>(n)));
      stats.std[i] = std::max(sd, kStdFloor);
    }
    return stats;
  }
};

}  // namespace

NormStats compute_stats(std::span<const PoseVector> poses) {
  Welford acc;
  for (const PoseVector& p : poses) acc.add(p);
  return acc.finish();
}

NormStats compute_stats(std::span<const CanonicalClip> clips) {
  Welford acc;
  for (const CanonicalClip& clip : clips) {
    for (const PoseVector& p : clip.poses) acc.add(p);
  }
  return acc.finish();
}

PoseFeatures normalize(const PoseVector& pose, const NormStats& stats) {
  PoseFeatures out;
  for (std::size_t i = 0; i < kPoseDim; ++i) {
    out[static_cast<Eigen::Index>(i)] = (pose.values[i] - stats.mean[i]) / stats.std[i];
  }
  return out;
}

PoseVector denormalize(const PoseFeatures& features, const NormStats& stats) {
  PoseVector pose;
  for (std::size_t i = 0; i < kPoseDim; ++i) {
    pose.values[i] = features[static_cast<Eigen::Index>(i)] * stats.std[i] + stats.mean[i];
  }
  return pose;
}

Eigen::VectorXf normalize_targets(std::span<const std::size_t> joints, std::span<const Eigen::Vector3f> positions,
                                  const NormStats& stats) {
  if (joints.size() != positions.size()) {
    throw Error(ErrorCode::DimensionMismatch, "target joint and position counts differ");
  }
  Eigen::VectorXf out(static_cast<Eigen::Index>(3 * joints.size()));
  for (std::size_t t = 0; t < joints.size(); ++t) {
    for (std::size_t a = 0; a < 3; ++a) {
      const std::size_t feature = 3 * joints[t] + a;
      out[static_cast<Eigen::Index>(3 * t + a)] = (positions[t][static_cast<Eigen::Index>(a)] - stats.mean[feature]) /
                                                   stats.std[feature];
    }
  }
  return out;
}

double max_frame_displacement(const CanonicalClip& clip) {
  double worst = 0.0;
  for (std::size_t f = 1; f < clip.poses.size(); ++f) {
    for (std::size_t j = 0; j < kJointCount; ++j) {
      const double d = (clip.poses[f].joint(j) - clip.poses[f - 1].joint(j)).cast<double>().norm();
      worst = std::max(worst, d);
    }
  }
  return worst;
}

std::size_t PoseDataset::pose_count() const {
  std::size_t n = 0;
  for (const auto& c : clips) n += c.poses.size();
  return n;
}

std::vector<std::size_t> PoseDataset::clip_indices(Split which) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    if (split[i] == which) out.push_back(i);
  }
  return out;
}

std::vector<PoseVector> PoseDataset::poses(Split which) const {
  std::vector<PoseVector> out;
  for (std::size_t i : clip_indices(which)) out.insert(out.end(), clips[i].poses.begin(), clips[i].poses.end());
  return out;
}

PoseDataset build_dataset(std::vector<CanonicalClip> clips, const DatasetOptions& options,
                          DatasetBuildReport* report) {
  DatasetBuildReport local;
  local.clips_in = clips.size();
  PoseDataset ds;
  for (CanonicalClip& clip : clips) {
    if (clip.poses.empty()) {
      ++local.dropped_empty;
    } else if (max_frame_displacement(clip) > options.jitter_threshold) {
      ++local.dropped_jittery;
    } else {
      ds.clips.push_back(std::move(clip));
    }
  }
  if (ds.clips.empty()) throw Error(ErrorCode::EmptyInput, "no usable clips left after filtering");

  std::vector<std::size_t> order(ds.clips.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(options.seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_val = static_cast<std::size_t>(std::ceil(options.validation_fraction * static_cast<double>(order.size())));
  if (order.size() < 2) n_val = 0;
  n_val = std::min(n_val, order.size() - 1);
  ds.split.assign(ds.clips.size(), Split::Train);
  for (std::size_t i = 0; i < n_val; ++i) ds.split[order[i]] = Split::Validation;

  const auto train = ds.poses(Split::Train);
  ds.stats = compute_stats(train);
  if (report) *report = local;
  return ds;
}

TrainingPair sample_training_pair(const PoseDataset& dataset, std::mt19937_64& rng, Split which) {
  std::vector<std::size_t> eligible;
  for (std::size_t i : dataset.clip_indices(which)) {
    if (dataset.clips[i].poses.size() >= 2) eligible.push_back(i);
  }
  if (eligible.empty()) throw Error(ErrorCode::EmptyInput, "no clip with at least two poses");
  std::uniform_int_distribution<std::size_t> pick_clip(0, eligible.size() - 1);
  const std::size_t clip = eligible[pick_clip(rng)];
  const std::size_t n = dataset.clips[clip].poses.size();
  std::uniform_int_distribution<std::size_t> pick_first(0, n - 1);
  std::uniform_int_distribution<std::size_t> pick_other(0, n - 2);
  const std::size_t a = pick_first(rng);
  std::size_t b = pick_other(rng);
  if (b >= a) ++b;
  return {dataset.clips[clip].poses[a], dataset.clips[clip].poses[b], clip, a, b};
}

std::vector<std::uint8_t> serialize_dataset(const PoseDataset& dataset) {
  detail::ByteWriter w;
  w.bytes("NPK1");
  w.u32(static_cast<std::uint32_t>(dataset.pose_count()));
  w.u32(static_cast<std::uint32_t>(kPoseDim));
  for (float v : dataset.stats.mean) w.f32(v);
  for (float v : dataset.stats.std) w.f32(v);
  w.u32(static_cast<std::uint32_t>(dataset.clips.size()));
  std::uint32_t offset = 0;
  for (std::size_t i = 0; i < dataset.clips.size(); ++i) {
    const auto len = static_cast<std::uint32_t>(dataset.clips[i].poses.size());
    w.u32(offset);
    w.u32(len);
    w.u32(dataset.split[i] == Split::Validation ? 1u : 0u);
    w.f32(static_cast<float>(dataset.clips[i].frame_time));
    offset += len;
  }
  for (const auto& clip : dataset.clips) {
    for (const auto& pose : clip.poses) {
      for (float v : pose.values) w.f32(v);
    }
  }
  return std::move(w.data());
}

PoseDataset deserialize_dataset(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, ErrorCode::CorruptHeader);
  if (r.bytes(4) != "NPK1") throw Error(ErrorCode::CorruptHeader, "not an NPK1 dataset");
  const std::uint32_t pose_count = r.u32();
  const std::uint32_t features = r.u32();
  if (features != kPoseDim) throw Error(ErrorCode::CorruptHeader, "feature count must be 63");
  PoseDataset ds;
  for (float& v : ds.stats.mean) v = r.f32();
  for (float& v : ds.stats.std) v = r.f32();
  const std::uint32_t clip_count = r.u32();
  r.need(static_cast<std::size_t>(clip_count) * 16);
  struct Entry {
    std::uint32_t offset, length, flags;
    float frame_time;
  };
  std::vector<Entry> table(clip_count);
  std::uint64_t expected_offset = 0;
  for (auto& e : table) {
    e = {r.u32(), r.u32(), r.u32(), r.f32()};
    if (e.offset != expected_offset) throw Error(ErrorCode::CorruptHeader, "clip table is not contiguous");
    expected_offset += e.length;
  }
  if (expected_offset != pose_count) throw Error(ErrorCode::CorruptHeader, "clip table does not cover pose count");
  if (r.remaining() != static_cast<std::size_t>(pose_count) * kPoseDim * 4) {
    throw Error(ErrorCode::SizeMismatch, "pose block size does not match header");
  }
  for (std::size_t i = 0; i < table.size(); ++i) {
    CanonicalClip clip;
    clip.source_id = "clip_" + std::to_string(i);
    clip.frame_time = table[i].frame_time;
    clip.poses.resize(table[i].length);
    for (auto& pose : clip.poses) {
      for (float& v : pose.values) v = r.f32();
    }
    ds.clips.push_back(std::move(clip));
    ds.split.push_back((table[i].flags & 1u) ? Split::Validation : Split::Train);
  }
  return ds;
}

void save_dataset(const PoseDataset& dataset, const std::filesystem::path& path) {
  detail::write_binary_file(path, serialize_dataset(dataset));
}

PoseDataset load_dataset(const std::filesystem::path& path) {
  return deserialize_dataset(detail::read_binary_file(path));
}

IngestResult ingest_bvh_directory(const std::filesystem::path& dir, const RetargetMapping& mapping,
                                  const DatasetOptions& options, const RetargetOptions& retarget_options) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, dir.string() + " is not a directory");
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".bvh") paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());

  IngestResult result;
  std::vector<CanonicalClip> clips;
  for (const auto& path : paths) {
    const std::string name = path.filename().string();
    try {
      CanonicalClip clip = retarget(parse_bvh(read_text_file(path)), mapping, name, retarget_options);
      result.frames_total += clip.poses.size();
      result.files.push_back(name);
      clips.push_back(std::move(clip));
    } catch (const std::exception& e) {
      result.failures.push_back({name, e.what()});
    }
  }
  if (clips.empty()) throw Error(ErrorCode::EmptyInput, "no BVH file in " + dir.string() + " could be ingested");
  result.dataset = build_dataset(std::move(clips), options, &result.report);
  return result;
}

}  // namespace npe
