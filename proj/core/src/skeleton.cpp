#include "npe/skeleton.hpp"

#include "npe/error.hpp"

#include <Eigen/Geometry>

#include <cmath>

namespace npe {

bool PoseVector::is_finite() const {
  for (float v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

namespace {

template <typename T>
PoseVector pose_from(std::span<const T> values) {
  if (values.size() != kPoseDim) {
    throw Error(ErrorCode::DimensionMismatch,
                "pose needs " + std::to_string(kPoseDim) + " values, got " + std::to_string(values.size()));
  }
  PoseVector pose;
  for (std::size_t i = 0; i < kPoseDim; ++i) {
    if (!std::isfinite(values[i])) throw Error(ErrorCode::NonFiniteInput, "pose contains a non-finite value");
    pose.values[i] = static_cast<float>(values[i]);
  }
  return pose;
}

SkeletonTopology make_canonical() {
  SkeletonTopology t;
  struct Row {
    const char* name;
    int parent;
    float x, y, z;
  };
  // Offsets in meters relative to the parent; the hips entry is absolute.
  static constexpr Row kRows[kJointCount] = {
      {"Hips", -1, 0.0f, 0.95f, 0.0f},
      {"Spine", 0, 0.0f, 0.12f, -0.01f},
      {"Spine1", 1, 0.0f, 0.14f, 0.01f},
      {"Neck", 2, 0.0f, 0.20f, -0.01f},
      {"Head", 3, 0.0f, 0.12f, 0.02f},
      {"LeftShoulder", 2, 0.03f, 0.17f, 0.0f},
      {"LeftArm", 5, 0.15f, 0.0f, 0.0f},
      {"LeftForeArm", 6, 0.28f, 0.0f, 0.0f},
      {"LeftHand", 7, 0.25f, 0.0f, 0.0f},
      {"RightShoulder", 2, -0.03f, 0.17f, 0.0f},
      {"RightArm", 9, -0.15f, 0.0f, 0.0f},
      {"RightForeArm", 10, -0.28f, 0.0f, 0.0f},
      {"RightHand", 11, -0.25f, 0.0f, 0.0f},
      {"LeftUpLeg", 0, 0.09f, -0.06f, 0.0f},
      {"LeftLeg", 13, 0.0f, -0.42f, 0.0f},
      {"LeftFoot", 14, 0.0f, -0.40f, 0.0f},
      {"LeftToeBase", 15, 0.0f, -0.05f, 0.13f},
      {"RightUpLeg", 0, -0.09f, -0.06f, 0.0f},
      {"RightLeg", 17, 0.0f, -0.42f, 0.0f},
      {"RightFoot", 18, 0.0f, -0.40f, 0.0f},
      {"RightToeBase", 19, 0.0f, -0.05f, 0.13f},
  };
  for (std::size_t i = 0; i < kJointCount; ++i) {
    t.joint_names[i] = kRows[i].name;
    t.parent[i] = kRows[i].parent;
    t.reference_offsets[i] = Eigen::Vector3f(kRows[i].x, kRows[i].y, kRows[i].z);
  }
  t.reference_bone_lengths = bone_lengths(t.reference_pose(), t);
  return t;
}

}  // namespace

PoseVector PoseVector::from_values(std::span<const float> values) { return pose_from(values); }
PoseVector PoseVector::from_values(std::span<const double> values) { return pose_from(values); }

std::optional<std::size_t> SkeletonTopology::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < kJointCount; ++i) {
    if (joint_names[i] == name) return i;
  }
  return std::nullopt;
}

PoseVector SkeletonTopology::reference_pose() const {
  PoseVector pose;
  for (std::size_t i = 0; i < kJointCount; ++i) {
    Eigen::Vector3f p = reference_offsets[i];
    if (parent[i] >= 0) p += pose.joint(static_cast<std::size_t>(parent[i]));
    pose.set_joint(i, p);
  }
  return pose;
}

Eigen::Vector3d SkeletonTopology::reference_direction(std::size_t bone) const {
  return reference_offsets[bone + 1].cast<double>().normalized();
}

const SkeletonTopology& canonical_topology() {
  static const SkeletonTopology topo = make_canonical();
  return topo;
}

CanonicalClip retarget(const BvhClip& clip, const RetargetMapping& mapping, std::string source_id,
                       const RetargetOptions& options) {
  const SkeletonTopology& topo = canonical_topology();
  std::string missing;
  for (const std::string& name : topo.joint_names) {
    if (!mapping.joints.contains(name)) missing += (missing.empty() ? "" : ", ") + name;
  }
  if (!missing.empty()) throw Error(ErrorCode::MissingMapping, "mapping lacks canonical joints: " + missing);
  if (!(mapping.unit_scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "unit_scale must be positive");

  std::array<std::size_t, kJointCount> source_index{};
  for (std::size_t i = 0; i < kJointCount; ++i) {
    const std::string& source = mapping.joints.find(topo.joint_names[i])->second;
    auto found = clip.find_joint(source);
    if (!found) {
      throw Error(ErrorCode::MappedJointNotFound,
                  "joint '" + source + "' (mapped to " + topo.joint_names[i] + ") not found in clip");
    }
    source_index[i] = *found;
  }

  CanonicalClip out;
  out.source_id = std::move(source_id);
  out.frame_time = clip.frame_time;
  out.poses.reserve(clip.frame_count());
  std::array<Eigen::Vector3d, kJointCount> world;
  for (std::size_t f = 0; f < clip.frame_count(); ++f) {
    const auto positions = forward_kinematics(clip, f);
    for (std::size_t i = 0; i < kJointCount; ++i) world[i] = positions[source_index[i]] * mapping.unit_scale;
    PoseVector pose = to_root_relative(world, mapping.up_axis);
    if (options.remove_heading) pose = remove_heading(pose);
    out.poses.push_back(pose);
  }
  return out;
}

PoseVector to_root_relative(std::span<const Eigen::Vector3d> world_positions, UpAxis up_axis) {
  if (world_positions.size() != kJointCount) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(kJointCount) + " joint positions");
  }
  std::array<Eigen::Vector3d, kJointCount> y_up;
  for (std::size_t i = 0; i < kJointCount; ++i) {
    const Eigen::Vector3d& p = world_positions[i];
    if (!p.allFinite()) throw Error(ErrorCode::NonFiniteInput, "non-finite joint position");
    // Z-up to Y-up is a -90 degree turn about X.
    y_up[i] = up_axis == UpAxis::Y ? p : Eigen::Vector3d(p.x(), p.z(), -p.y());
  }
  const Eigen::Vector3d root(y_up[joint::Hips].x(), 0.0, y_up[joint::Hips].z());
  PoseVector pose;
  for (std::size_t i = 0; i < kJointCount; ++i) pose.set_joint(i, (y_up[i] - root).cast<float>());
  return pose;
}

PoseVector remove_heading(const PoseVector& pose) {
  const Eigen::Vector3f hip_line = pose.joint(joint::LeftUpLeg) - pose.joint(joint::RightUpLeg);
  const double angle = std::atan2(static_cast<double>(hip_line.z()), static_cast<double>(hip_line.x()));
  // Rotating by +angle about Y maps the direction (cos a, 0, sin a) onto +X.
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitY()).toRotationMatrix();
  PoseVector out;
  for (std::size_t i = 0; i < kJointCount; ++i) out.set_joint(i, (rot * pose.joint(i).cast<double>()).cast<float>());
  return out;
}

BoneLengths bone_lengths(const PoseVector& pose, const SkeletonTopology& topo) {
  BoneLengths lengths{};
  for (std::size_t b = 0; b < kBoneCount; ++b) {
    const std::size_t child = b + 1;
    const auto parent = static_cast<std::size_t>(topo.parent[child]);
    lengths[b] = (pose.joint(child).cast<double>() - pose.joint(parent).cast<double>()).norm();
  }
  return lengths;
}

}  // namespace npe
