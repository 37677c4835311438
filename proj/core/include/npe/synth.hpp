#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace npe {

// Procedural motion clips written as CMU-style BVH documents: CMU joint names
// (including the zero-length helper joints and finger stubs), file units of
// roughly 5.6 cm and ZYX Euler channels. They stand in for public capture
// data when none is available and are parsed through the normal ingest path.

enum class MotionFamily { Walk, Reach, Squat, Jacks, Freestyle };

enum class EulerStyle { ZYX, ZXY };

struct SynthClipOptions {
  MotionFamily family = MotionFamily::Reach;
  std::size_t frames = 600;
  double frame_time = 1.0 / 60.0;
  double actor_scale = 1.0;  // uniform body-size factor
  EulerStyle style = EulerStyle::ZYX;
  bool inject_jitter = false;  // single-frame spikes the jitter filter must catch
  std::uint64_t seed = 0;
};

std::string synthesize_bvh(const SynthClipOptions& options);

struct SynthCorpusOptions {
  std::size_t clips = 8;
  std::size_t min_frames = 400;
  std::size_t max_frames = 900;
  double frame_time = 1.0 / 60.0;
  double jitter_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct SynthClipFile {
  std::string filename;
  std::string text;
  SynthClipOptions options;
};

std::vector<SynthClipFile> synthesize_corpus(const SynthCorpusOptions& options);

/// Mapping file for the synthetic CMU-style skeleton (unit_scale 0.056444).
std::string synthetic_mapping_text();

inline constexpr double kCmuUnitScale = 0.056444;

/// Writes every clip plus "cmu_style.map" into `dir`; returns the clip files.
std::vector<SynthClipFile> write_synthetic_corpus(const std::filesystem::path& dir, const SynthCorpusOptions& options);

std::string to_string(MotionFamily family);

}  // namespace npe
