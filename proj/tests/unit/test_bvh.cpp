#include "npe/bvh.hpp"
#include "npe/error.hpp"
#include "npe/synth.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace npe;
using npe::testing::two_joint_bvh;

namespace {

const char* kMinimal =
    "HIERARCHY\n"
    "ROOT Hips\n"
    "{\n"
    "  OFFSET 0 0 0\n"
    "  CHANNELS 6 Xposition Yposition Zposition Zrotation Yrotation Xrotation\n"
    "  JOINT Arm\n"
    "  {\n"
    "    OFFSET 1 0 0\n"
    "    CHANNELS 3 Zrotation Yrotation Xrotation\n"
    "  }\n"
    "}\n"
    "MOTION\n"
    "Frames: 1\n"
    "Frame Time: 0.0083333\n"
    "0 0 0 0 0 0 0 0 0\n";

BvhClip with_frame(const std::string& row) {
  std::string text = kMinimal;
  text.replace(text.rfind("0 0 0 0 0 0 0 0 0"), std::string("0 0 0 0 0 0 0 0 0").size(), row);
  return parse_bvh(text);
}

}  // namespace

TEST(Bvh, MinimalTwoJointFile) {
  const BvhClip clip = parse_bvh(kMinimal);
  ASSERT_EQ(clip.joints.size(), 2u);
  EXPECT_EQ(clip.joints[0].name, "Hips");
  EXPECT_FALSE(clip.joints[0].parent.has_value());
  EXPECT_EQ(clip.joints[1].name, "Arm");
  EXPECT_EQ(clip.joints[1].parent, 0u);
  EXPECT_EQ(clip.joints[0].channels.size(), 6u);
  EXPECT_EQ(clip.joints[1].channels.size(), 3u);
  EXPECT_EQ(clip.frame_count(), 1u);
  ASSERT_EQ(clip.channel_count(), 9u);
  EXPECT_TRUE(clip.frames.isZero());
  EXPECT_DOUBLE_EQ(clip.frame_time, 0.0083333);
}

TEST(Bvh, ChannelOrderIsKeptPerJoint) {
  const BvhClip clip = parse_bvh(two_joint_bvh({"0 0 0 0 0 0 0 0 0"}));
  const std::vector<BvhChannel> root = {BvhChannel::Xposition, BvhChannel::Yposition, BvhChannel::Zposition,
                                        BvhChannel::Zrotation, BvhChannel::Xrotation, BvhChannel::Yrotation};
  EXPECT_EQ(clip.joints[0].channels, root);
  EXPECT_EQ(clip.joints[1].first_column, 6u);
}

TEST(Bvh, EndSiteBecomesChannelLessLeaf) {
  const BvhClip clip = parse_bvh(two_joint_bvh({"0 0 0 0 0 0 0 0 0"}));
  ASSERT_EQ(clip.joints.size(), 3u);
  EXPECT_EQ(clip.joints[2].name, "Chest_End");
  EXPECT_TRUE(clip.joints[2].end_site);
  EXPECT_TRUE(clip.joints[2].channels.empty());
  EXPECT_EQ(clip.joints[2].parent, 1u);
}

TEST(Bvh, ShortMotionRowIsChannelCountMismatch) {
  try {
    parse_bvh(two_joint_bvh({"0 0 0 0 0 0 0 0"}));
    FAIL() << "expected an error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.code(), ErrorCode::ChannelCountMismatch);
    EXPECT_GT(e.line(), 0);
  }
}

TEST(Bvh, LongMotionRowIsChannelCountMismatch) {
  try {
    parse_bvh(two_joint_bvh({"0 0 0 0 0 0 0 0 0 0"}));
    FAIL() << "expected an error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.code(), ErrorCode::ChannelCountMismatch);
  }
}

TEST(Bvh, UnknownChannelName) {
  std::string text = kMinimal;
  text.replace(text.find("CHANNELS 3 Zrotation"), std::string("CHANNELS 3 Zrotation").size(), "CHANNELS 3 Wrotation");
  try {
    parse_bvh(text);
    FAIL() << "expected an error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownChannel);
    EXPECT_EQ(e.line(), 9);
    EXPECT_EQ(e.column(), 16);
  }
}

TEST(Bvh, MalformedSyntaxReportsPosition) {
  std::string text = kMinimal;
  text.replace(text.find("OFFSET 1 0 0"), std::string("OFFSET 1 0 0").size(), "OFFSET 1 x 0");
  try {
    parse_bvh(text);
    FAIL() << "expected an error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedSyntax);
    EXPECT_EQ(e.line(), 8);
    EXPECT_EQ(e.column(), 14);
    EXPECT_NE(std::string(e.what()).find("line 8"), std::string::npos);
  }
}

TEST(Bvh, InvalidHeaderValues) {
  const auto expect_malformed = [](const std::string& text) {
    try {
      parse_bvh(text);
      FAIL() << "expected an error";
    } catch (const ParseError& e) {
      EXPECT_EQ(e.code(), ErrorCode::MalformedSyntax);
    }
  };
  std::string zero_time = kMinimal;
  zero_time.replace(zero_time.find("0.0083333"), 9, "0");
  expect_malformed(zero_time);
  std::string no_frames = kMinimal;
  no_frames.replace(no_frames.find("Frames: 1"), 9, "Frames: 0");
  expect_malformed(no_frames.substr(0, no_frames.rfind("0 0 0 0 0 0 0 0 0")));
  std::string missing_row = kMinimal;
  missing_row.replace(missing_row.find("Frames: 1"), 9, "Frames: 2");
  expect_malformed(missing_row);
  std::string bad_count = kMinimal;
  bad_count.replace(bad_count.find("CHANNELS 3"), 10, "CHANNELS 2");
  expect_malformed(bad_count);
}

TEST(Bvh, CrlfInputParses) {
  std::string text = kMinimal;
  std::string crlf;
  for (char c : text) {
    if (c == '\n') crlf += '\r';
    crlf += c;
  }
  const BvhClip a = parse_bvh(text);
  const BvhClip b = parse_bvh(crlf);
  EXPECT_EQ(a.joints.size(), b.joints.size());
  EXPECT_EQ(a.frames, b.frames);
}

// Counts declared joints and the Frames header with a plain text scan.
TEST(Bvh, SyntheticCmuClipMatchesIndependentTextScan) {
  SynthClipOptions o;
  o.family = MotionFamily::Walk;
  o.frames = 240;
  o.seed = 3;
  const std::string text = synthesize_bvh(o);
  std::istringstream in(text);
  std::string tok;
  std::size_t joints = 0, end_sites = 0, frames = 0, rows = 0;
  bool in_motion = false;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream words(line);
    if (!(words >> tok)) continue;
    if (tok == "ROOT" || tok == "JOINT") ++joints;
    if (tok == "End") ++end_sites;
    if (tok == "Frames:") words >> frames;
    if (in_motion && tok != "Frame" && tok != "Frames:") ++rows;
    if (tok == "MOTION") in_motion = true;
  }
  const BvhClip clip = parse_bvh(text);
  EXPECT_EQ(clip.joints.size(), joints + end_sites);
  EXPECT_EQ(clip.frame_count(), frames);
  EXPECT_EQ(rows, frames);
  EXPECT_EQ(frames, 240u);
}

TEST(Bvh, ZeroRotationsSumOffsetsAlongChain) {
  const BvhClip clip = parse_bvh(two_joint_bvh({"0 0 0 0 0 0 0 0 0"}));
  const auto p = forward_kinematics(clip, 0);
  EXPECT_TRUE(p[0].isApprox(Eigen::Vector3d(0, 0, 0)));
  EXPECT_TRUE(p[1].isApprox(Eigen::Vector3d(0, 1, 0)));
  EXPECT_TRUE(p[2].isApprox(Eigen::Vector3d(0, 1.5, 0)));
}

TEST(Bvh, NinetyDegreeZRotationAtRoot) {
  const BvhClip clip = with_frame("0 0 0 90 0 0 0 0 0");
  const auto p = forward_kinematics(clip, 0);
  EXPECT_NEAR(p[1].x(), 0.0, 1e-6);
  EXPECT_NEAR(p[1].y(), 1.0, 1e-6);
  EXPECT_NEAR(p[1].z(), 0.0, 1e-6);
}

TEST(Bvh, RootTranslationShiftsEveryJoint) {
  const auto base = forward_kinematics(with_frame("0 0 0 10 20 30 40 50 60"), 0);
  const auto moved = forward_kinematics(with_frame("2 3 4 10 20 30 40 50 60"), 0);
  for (std::size_t i = 0; i < base.size(); ++i) {
    EXPECT_TRUE((moved[i] - base[i]).isApprox(Eigen::Vector3d(2, 3, 4), 1e-12));
  }
}

TEST(Bvh, RotationOrderFollowsDeclaredChannels) {
  // Z then Y applied to the child offset (1,0,0): Rz(90) * Ry(90) * x = Rz(90) * (0,0,-1) = (0,0,-1).
  const auto zy = forward_kinematics(with_frame("0 0 0 90 90 0 0 0 0"), 0);
  EXPECT_TRUE(zy[1].isApprox(Eigen::Vector3d(0, 0, -1), 1e-9));
  std::string text = kMinimal;
  text.replace(text.find("Zrotation Yrotation Xrotation\n  JOINT"), 29, "Yrotation Zrotation Xrotation");
  // Ry(90) * Rz(90) * x = Ry(90) * (0,1,0) = (0,1,0).
  BvhClip yz = parse_bvh(text);
  yz.frames.row(0) << 0, 0, 0, 90, 90, 0, 0, 0, 0;
  const auto p = forward_kinematics(yz, 0);
  EXPECT_TRUE(p[1].isApprox(Eigen::Vector3d(0, 1, 0), 1e-9));
}

TEST(Bvh, FrameOutOfRange) {
  const BvhClip clip = parse_bvh(kMinimal);
  try {
    forward_kinematics(clip, 1);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FrameOutOfRange);
  }
}

TEST(Bvh, ForwardKinematicsIsDeterministic) {
  SynthClipOptions o;
  o.frames = 20;
  o.seed = 11;
  const BvhClip clip = parse_bvh(synthesize_bvh(o));
  for (std::size_t f = 0; f < clip.frame_count(); ++f) {
    const auto a = forward_kinematics(clip, f);
    const auto b = forward_kinematics(clip, f);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].x(), b[i].x());
      EXPECT_EQ(a[i].y(), b[i].y());
      EXPECT_EQ(a[i].z(), b[i].z());
    }
  }
}

TEST(Bvh, BonesAreRigidInEveryFrame) {
  for (MotionFamily family : {MotionFamily::Walk, MotionFamily::Freestyle, MotionFamily::Jacks}) {
    SynthClipOptions o;
    o.family = family;
    o.frames = 120;
    o.seed = 5;
    o.style = family == MotionFamily::Jacks ? EulerStyle::ZXY : EulerStyle::ZYX;
    const BvhClip clip = parse_bvh(synthesize_bvh(o));
    for (std::size_t f = 0; f < clip.frame_count(); f += 7) {
      const auto p = forward_kinematics(clip, f);
      for (std::size_t j = 1; j < clip.joints.size(); ++j) {
        const double bone = (p[j] - p[*clip.joints[j].parent]).norm();
        EXPECT_NEAR(bone, clip.joints[j].offset.norm(), 1e-5) << clip.joints[j].name << " frame " << f;
      }
    }
  }
}

TEST(Bvh, HierarchyPrinterRoundTripsTheTree) {
  SynthClipOptions o;
  o.frames = 2;
  o.seed = 1;
  const BvhClip clip = parse_bvh(synthesize_bvh(o));
  std::string text = format_hierarchy(clip);
  text += "MOTION\nFrames: 1\nFrame Time: 0.01\n";
  for (std::size_t c = 0; c < clip.channel_count(); ++c) text += "0 ";
  text += "\n";
  const BvhClip again = parse_bvh(text);
  ASSERT_EQ(again.joints.size(), clip.joints.size());
  for (std::size_t i = 0; i < clip.joints.size(); ++i) {
    EXPECT_EQ(again.joints[i].name, clip.joints[i].name);
    EXPECT_EQ(again.joints[i].parent, clip.joints[i].parent);
    EXPECT_EQ(again.joints[i].channels, clip.joints[i].channels);
    EXPECT_EQ(again.joints[i].end_site, clip.joints[i].end_site);
    EXPECT_TRUE(again.joints[i].offset.isApprox(clip.joints[i].offset, 1e-12) ||
                (again.joints[i].offset.isZero() && clip.joints[i].offset.isZero()));
  }
}
