#include "npe/bvh.hpp"
#include "npe/dataset.hpp"
#include "npe/synth.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <set>

namespace npe {
namespace {

TEST(Synth, DeterministicPerSeed) {
  SynthClipOptions o;
  o.family = MotionFamily::Freestyle;
  o.frames = 50;
  o.seed = 4;
  EXPECT_EQ(synthesize_bvh(o), synthesize_bvh(o));
  SynthClipOptions other = o;
  other.seed = 5;
  EXPECT_NE(synthesize_bvh(o), synthesize_bvh(other));
}

TEST(Synth, EveryFamilyAndStyleParses) {
  for (auto family : {MotionFamily::Walk, MotionFamily::Reach, MotionFamily::Squat, MotionFamily::Jacks,
                      MotionFamily::Freestyle}) {
    for (auto style : {EulerStyle::ZYX, EulerStyle::ZXY}) {
      SynthClipOptions o;
      o.family = family;
      o.style = style;
      o.frames = 40;
      const BvhClip clip = parse_bvh(synthesize_bvh(o));
      EXPECT_EQ(clip.frame_count(), 40u) << to_string(family);
      EXPECT_TRUE(clip.find_joint("LHipJoint").has_value());
      EXPECT_TRUE(clip.find_joint("Neck1").has_value());
      const CanonicalClip c = retarget(clip, parse_mapping(synthetic_mapping_text()));
      EXPECT_LE(max_frame_displacement(c), 0.3) << to_string(family);
      for (const auto& p : c.poses) ASSERT_TRUE(p.is_finite());
    }
  }
}

TEST(Synth, StylesDescribeTheSameMotion) {
  SynthClipOptions a;
  a.family = MotionFamily::Reach;
  a.frames = 30;
  a.seed = 9;
  SynthClipOptions b = a;
  b.style = EulerStyle::ZXY;
  const RetargetMapping m = parse_mapping(synthetic_mapping_text());
  const CanonicalClip ca = retarget(parse_bvh(synthesize_bvh(a)), m);
  const CanonicalClip cb = retarget(parse_bvh(synthesize_bvh(b)), m);
  for (std::size_t f = 0; f < ca.poses.size(); ++f) {
    for (std::size_t i = 0; i < kPoseDim; ++i) ASSERT_NEAR(ca.poses[f].values[i], cb.poses[f].values[i], 1e-3);
  }
}

TEST(Synth, FeetStayNearTheFloor) {
  SynthClipOptions o;
  o.family = MotionFamily::Squat;
  o.frames = 120;
  const CanonicalClip c = retarget(parse_bvh(synthesize_bvh(o)), parse_mapping(synthetic_mapping_text()));
  for (const auto& p : c.poses) {
    float lowest = 10.0f;
    for (std::size_t j = 0; j < kJointCount; ++j) lowest = std::min(lowest, p.joint(j).y());
    EXPECT_NEAR(lowest, 0.0f, 0.06f);
  }
}

TEST(Synth, JitteredClipsAreCaughtByTheFilter) {
  SynthClipOptions o;
  o.inject_jitter = true;
  o.frames = 200;
  const CanonicalClip c = retarget(parse_bvh(synthesize_bvh(o)), parse_mapping(synthetic_mapping_text()));
  EXPECT_GT(max_frame_displacement(c), 0.3);
}

TEST(SynthCorpus, NamesFamiliesAndLengths) {
  SynthCorpusOptions o;
  o.clips = 30;
  o.min_frames = 20;
  o.max_frames = 40;
  o.jitter_fraction = 0.2;
  o.seed = 2;
  const auto files = synthesize_corpus(o);
  ASSERT_EQ(files.size(), 30u);
  std::set<std::string> names;
  std::set<MotionFamily> families;
  std::size_t jittery = 0;
  for (const auto& f : files) {
    names.insert(f.filename);
    families.insert(f.options.family);
    EXPECT_GE(f.options.frames, 20u);
    EXPECT_LE(f.options.frames, 40u);
    EXPECT_TRUE(f.filename.ends_with(".bvh"));
    jittery += f.options.inject_jitter ? 1 : 0;
  }
  EXPECT_EQ(names.size(), 30u);
  EXPECT_GE(families.size(), 4u);
  EXPECT_EQ(jittery, 6u);
}

TEST(SynthCorpus, WritesClipsAndMapping) {
  const auto dir = testing::fresh_temp_dir("synth_write");
  SynthCorpusOptions o;
  o.clips = 3;
  o.min_frames = 10;
  o.max_frames = 12;
  const auto files = write_synthetic_corpus(dir, o);
  EXPECT_TRUE(std::filesystem::exists(dir / "cmu_style.map"));
  for (const auto& f : files) EXPECT_TRUE(std::filesystem::exists(dir / f.filename));
  EXPECT_EQ(parse_mapping(synthetic_mapping_text()).unit_scale, kCmuUnitScale);
}

}  // namespace
}  // namespace npe
