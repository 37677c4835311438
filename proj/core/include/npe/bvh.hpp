#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace npe {

enum class BvhChannel { Xposition, Yposition, Zposition, Xrotation, Yrotation, Zrotation };

std::string_view to_string(BvhChannel channel);

struct BvhJoint {
  std::string name;
  std::optional<std::size_t> parent;
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  std::vector<BvhChannel> channels;
  // Column of the first channel in a motion row; meaningless when channels is empty.
  std::size_t first_column = 0;
  bool end_site = false;
};

struct BvhClip {
  std::vector<BvhJoint> joints;
  double frame_time = 0.0;
  // One row per frame, one column per declared channel, file order.
  Eigen::MatrixXd frames;

  std::size_t frame_count() const { return static_cast<std::size_t>(frames.rows()); }
  std::size_t channel_count() const { return static_cast<std::size_t>(frames.cols()); }
  std::optional<std::size_t> find_joint(std::string_view name) const;
};

/// Parses a complete BVH document (HIERARCHY + MOTION). End Site blocks become
/// channel-less leaf joints named "<parent>_End". Accepts LF and CRLF input.
/// Throws ParseError with the offending line and column.
BvhClip parse_bvh(std::string_view source);

/// World-space joint positions for one frame, in file units, one per joint.
/// Rotations compose in each joint's declared channel order (Euler degrees).
std::vector<Eigen::Vector3d> forward_kinematics(const BvhClip& clip, std::size_t frame);

/// Debug printer for the HIERARCHY section only.
std::string format_hierarchy(const BvhClip& clip);

}  // namespace npe
