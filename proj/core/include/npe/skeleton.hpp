#pragma once

#include "npe/bvh.hpp"

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace npe {

inline constexpr std::size_t kJointCount = 21;
inline constexpr std::size_t kBoneCount = kJointCount - 1;
inline constexpr std::size_t kPoseDim = 3 * kJointCount;

/// Canonical joint indices.
namespace joint {
inline constexpr std::size_t Hips = 0, Spine = 1, Spine1 = 2, Neck = 3, Head = 4;
inline constexpr std::size_t LeftShoulder = 5, LeftArm = 6, LeftForeArm = 7, LeftHand = 8;
inline constexpr std::size_t RightShoulder = 9, RightArm = 10, RightForeArm = 11, RightHand = 12;
inline constexpr std::size_t LeftUpLeg = 13, LeftLeg = 14, LeftFoot = 15, LeftToeBase = 16;
inline constexpr std::size_t RightUpLeg = 17, RightLeg = 18, RightFoot = 19, RightToeBase = 20;
}  // namespace joint

/// 21 root-relative joint positions (meters, Y up) flattened as x,y,z per joint.
struct PoseVector {
  std::array<float, kPoseDim> values{};

  Eigen::Vector3f joint(std::size_t index) const {
    return {values[3 * index], values[3 * index + 1], values[3 * index + 2]};
  }
  void set_joint(std::size_t index, const Eigen::Vector3f& p) {
    values[3 * index] = p.x();
    values[3 * index + 1] = p.y();
    values[3 * index + 2] = p.z();
  }
  bool is_finite() const;

  /// Throws DimensionMismatch unless exactly 63 values, NonFiniteInput on NaN/inf.
  static PoseVector from_values(std::span<const float> values);
  static PoseVector from_values(std::span<const double> values);

  Eigen::Map<const Eigen::VectorXf> as_eigen() const { return {values.data(), static_cast<Eigen::Index>(kPoseDim)}; }

  friend bool operator==(const PoseVector&, const PoseVector&) = default;
};

using BoneLengths = std::array<double, kBoneCount>;

/// Fixed 21-joint tree. Bone e connects joint e+1 to its parent.
struct SkeletonTopology {
  std::array<std::string, kJointCount> joint_names;
  std::array<int, kJointCount> parent{};
  std::array<Eigen::Vector3f, kJointCount> reference_offsets;
  BoneLengths reference_bone_lengths{};

  std::optional<std::size_t> index_of(std::string_view name) const;
  /// Reference T-pose in root-relative coordinates.
  PoseVector reference_pose() const;
  /// Unit direction of bone e in the reference pose.
  Eigen::Vector3d reference_direction(std::size_t bone) const;
};

const SkeletonTopology& canonical_topology();

struct CanonicalClip {
  std::vector<PoseVector> poses;
  std::string source_id;
  double frame_time = 0.0;
};

enum class UpAxis { Y, Z };

struct RetargetMapping {
  std::map<std::string, std::string, std::less<>> joints;  // canonical -> source name
  double unit_scale = 1.0;
  UpAxis up_axis = UpAxis::Y;
};

/// Parses `canonical = source` lines plus `unit_scale` and `up_axis` headers.
/// '#' starts a comment.
RetargetMapping parse_mapping(std::string_view text);

struct RetargetOptions {
  bool remove_heading = false;
};

CanonicalClip retarget(const BvhClip& clip, const RetargetMapping& mapping, std::string source_id = {},
                       const RetargetOptions& options = {});

/// Subtracts the floor projection of the hips from every joint after converting
/// to Y up.
PoseVector to_root_relative(std::span<const Eigen::Vector3d> world_positions, UpAxis up_axis = UpAxis::Y);

/// Rotates about the vertical axis so the hip line points along +X.
PoseVector remove_heading(const PoseVector& pose);

BoneLengths bone_lengths(const PoseVector& pose, const SkeletonTopology& topo = canonical_topology());

}  // namespace npe
