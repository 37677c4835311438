#pragma once

#include "npe/skeleton.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace npe {

/// Joint positions from base to end effector with fixed segment lengths.
struct KinematicChain {
  std::vector<Eigen::Vector3d> joints;
  std::vector<double> lengths;  // lengths[i] spans joints[i] -> joints[i+1]

  /// Derives segment lengths from the positions; needs at least two joints.
  static KinematicChain from_positions(std::vector<Eigen::Vector3d> positions);
  double reach() const;
};

struct FabrikConfig {
  double tolerance = 1e-3;  // meters
  std::size_t max_iterations = 20;

  void validate() const;
};

struct ChainSolve {
  KinematicChain chain;
  std::size_t iterations = 0;
  bool reachable = true;
};

/// Forward/backward reaching on one chain. Unreachable targets produce the
/// fully extended chain pointing at the target.
ChainSolve fabrik_solve_chain(const KinematicChain& chain, const Eigen::Vector3d& target, const FabrikConfig& config);

struct JointTarget {
  std::size_t joint = 0;
  Eigen::Vector3f position = Eigen::Vector3f::Zero();
};

/// Joints that may carry a full-body target: the head, both hands and both feet.
bool is_fullbody_effector(std::size_t joint);

/// Multi end-effector FABRIK over five chains: hips -> head (through the spine),
/// spine top -> each hand, hips -> each foot. The spine top is the centroid of
/// the positions proposed by targeted upper-body chains. The hips stay fixed;
/// toes follow their foot rigidly. Throws UncoveredJoint for non-effector targets.
PoseVector fabrik_solve_fullbody(const PoseVector& pose, const SkeletonTopology& topo,
                                 std::span<const JointTarget> targets, const FabrikConfig& config,
                                 std::size_t* iterations = nullptr);

/// One root-outward pass that places every joint at its reference distance
/// from the already placed parent, along the parent -> generated direction.
PoseVector bone_length_postprocess(const PoseVector& generated, const BoneLengths& reference_lengths,
                                   const SkeletonTopology& topo = canonical_topology());

}  // namespace npe
