#include "npe/fabrik.hpp"

#include "npe/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

namespace npe {

namespace {

constexpr double kCoincident = 1e-12;

// Places `moving` at distance `length` from `anchor` along anchor -> moving.
Eigen::Vector3d reach_toward(const Eigen::Vector3d& anchor, const Eigen::Vector3d& moving, double length,
                             const Eigen::Vector3d& fallback_dir) {
  Eigen::Vector3d d = moving - anchor;
  const double r = d.norm();
  if (r < kCoincident) return anchor + length * fallback_dir;
  return anchor + (length / r) * d;
}

Eigen::Vector3d unit_or(const Eigen::Vector3d& v, const Eigen::Vector3d& fallback) {
  const double n = v.norm();
  return n < kCoincident ? fallback : Eigen::Vector3d(v / n);
}

// Inward pass: effector pinned at `target`, every joint pulled toward its outer neighbour.
void reach_inward(std::vector<Eigen::Vector3d>& p, std::span<const double> len, const Eigen::Vector3d& target) {
  const std::size_t n = p.size();
  p[n - 1] = target;
  for (std::size_t i = n - 1; i-- > 0;) p[i] = reach_toward(p[i + 1], p[i], len[i], Eigen::Vector3d::UnitY());
}

// Outward pass: base pinned, every joint pulled toward its inner neighbour.
void reach_outward(std::vector<Eigen::Vector3d>& p, std::span<const double> len, const Eigen::Vector3d& base) {
  p[0] = base;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) p[i + 1] = reach_toward(p[i], p[i + 1], len[i], Eigen::Vector3d::UnitY());
}

}  // namespace

KinematicChain KinematicChain::from_positions(std::vector<Eigen::Vector3d> positions) {
  if (positions.size() < 2) throw Error(ErrorCode::InvalidArgument, "a chain needs at least two joints");
  KinematicChain c;
  c.joints = std::move(positions);
  for (std::size_t i = 0; i + 1 < c.joints.size(); ++i) c.lengths.push_back((c.joints[i + 1] - c.joints[i]).norm());
  return c;
}

double KinematicChain::reach() const {
  double total = 0.0;
  for (double l : lengths) total += l;
  return total;
}

void FabrikConfig::validate() const {
  if (!(tolerance > 0.0) || max_iterations < 1) {
    throw Error(ErrorCode::InvalidArgument, "FABRIK needs tolerance > 0 and max_iterations >= 1");
  }
}

ChainSolve fabrik_solve_chain(const KinematicChain& chain, const Eigen::Vector3d& target, const FabrikConfig& config) {
  config.validate();
  if (chain.joints.size() < 2 || chain.lengths.size() + 1 != chain.joints.size()) {
    throw Error(ErrorCode::InvalidArgument, "malformed kinematic chain");
  }
  ChainSolve out{chain, 0, true};
  auto& p = out.chain.joints;
  const auto& len = out.chain.lengths;
  const Eigen::Vector3d base = p.front();

  if ((target - base).norm() > chain.reach()) {
    out.reachable = false;
    out.iterations = 1;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
      const Eigen::Vector3d dir = unit_or(target - p[i], unit_or(p[i + 1] - p[i], Eigen::Vector3d::UnitX()));
      p[i + 1] = p[i] + len[i] * dir;
    }
    return out;
  }

  while ((p.back() - target).norm() > config.tolerance && out.iterations < config.max_iterations) {
    ++out.iterations;
    reach_inward(p, len, target);
    reach_outward(p, len, base);
  }
  return out;
}

bool is_fullbody_effector(std::size_t j) {
  return j == joint::Head || j == joint::LeftHand || j == joint::RightHand || j == joint::LeftFoot ||
         j == joint::RightFoot;
}

namespace {

struct Branch {
  std::vector<std::size_t> joints;  // sub-base first, effector last
  std::vector<double> lengths;
  std::vector<Eigen::Vector3d> scratch;
  std::optional<Eigen::Vector3d> target;
};

Branch make_branch(std::vector<std::size_t> joints, const std::array<Eigen::Vector3d, kJointCount>& p) {
  Branch b;
  b.joints = std::move(joints);
  for (std::size_t i = 0; i + 1 < b.joints.size(); ++i) b.lengths.push_back((p[b.joints[i + 1]] - p[b.joints[i]]).norm());
  b.scratch.resize(b.joints.size());
  return b;
}

void load(Branch& b, const std::array<Eigen::Vector3d, kJointCount>& p) {
  for (std::size_t i = 0; i < b.joints.size(); ++i) b.scratch[i] = p[b.joints[i]];
}

void store(const Branch& b, std::array<Eigen::Vector3d, kJointCount>& p) {
  for (std::size_t i = 0; i < b.joints.size(); ++i) p[b.joints[i]] = b.scratch[i];
}

}  // namespace

PoseVector fabrik_solve_fullbody(const PoseVector& pose, const SkeletonTopology& topo,
                                 std::span<const JointTarget> targets, const FabrikConfig& config,
                                 std::size_t* iterations) {
  config.validate();
  (void)topo;  // the chain decomposition is fixed to the canonical tree
  std::array<Eigen::Vector3d, kJointCount> p;
  for (std::size_t j = 0; j < kJointCount; ++j) p[j] = pose.joint(j).cast<double>();

  using namespace joint;
  Branch torso = make_branch({Hips, Spine, Spine1}, p);
  std::array<Branch, 3> upper = {make_branch({Spine1, Neck, Head}, p),
                                 make_branch({Spine1, LeftShoulder, LeftArm, LeftForeArm, LeftHand}, p),
                                 make_branch({Spine1, RightShoulder, RightArm, RightForeArm, RightHand}, p)};
  std::array<Branch, 2> legs = {make_branch({Hips, LeftUpLeg, LeftLeg, LeftFoot}, p),
                                make_branch({Hips, RightUpLeg, RightLeg, RightFoot}, p)};
  const Eigen::Vector3d toe_offset[2] = {p[LeftToeBase] - p[LeftFoot], p[RightToeBase] - p[RightFoot]};

  for (const JointTarget& t : targets) {
    if (!t.position.allFinite()) throw Error(ErrorCode::InvalidTargets, "non-finite target position");
    Branch* owner = nullptr;
    for (auto& b : upper) {
      if (b.joints.back() == t.joint) owner = &b;
    }
    for (auto& b : legs) {
      if (b.joints.back() == t.joint) owner = &b;
    }
    if (!owner) {
      throw Error(ErrorCode::UncoveredJoint,
                  "joint " + std::to_string(t.joint) + " is not an end effector of the full-body chains");
    }
    owner->target = t.position.cast<double>();
  }

  auto residual = [&] {
    double worst = 0.0;
    for (const auto& b : upper) {
      if (b.target) worst = std::max(worst, (p[b.joints.back()] - *b.target).norm());
    }
    for (const auto& b : legs) {
      if (b.target) worst = std::max(worst, (p[b.joints.back()] - *b.target).norm());
    }
    return worst;
  };

  const bool upper_targeted =
      std::any_of(upper.begin(), upper.end(), [](const Branch& b) { return b.target.has_value(); });
  const Eigen::Vector3d root = p[Hips];
  std::size_t iter = 0;
  while (!targets.empty() && residual() > config.tolerance && iter < config.max_iterations) {
    ++iter;
    if (upper_targeted) {
      // Inward: each targeted branch proposes a spine-top position.
      const Eigen::Vector3d spine_top = p[Spine1];
      Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
      int proposals = 0;
      for (auto& b : upper) {
        if (!b.target) continue;
        load(b, p);
        reach_inward(b.scratch, b.lengths, *b.target);
        store(b, p);
        p[Spine1] = spine_top;
        centroid += b.scratch.front();
        ++proposals;
      }
      centroid /= proposals;
      load(torso, p);
      reach_inward(torso.scratch, torso.lengths, centroid);
      // Outward: hips pinned, spine then every upper branch from the new spine top.
      reach_outward(torso.scratch, torso.lengths, root);
      store(torso, p);
      for (auto& b : upper) {
        load(b, p);
        b.scratch.front() = p[Spine1];
        reach_outward(b.scratch, b.lengths, p[Spine1]);
        store(b, p);
      }
    }
    for (auto& b : legs) {
      if (!b.target) continue;
      load(b, p);
      reach_inward(b.scratch, b.lengths, *b.target);
      reach_outward(b.scratch, b.lengths, root);
      store(b, p);
    }
  }
  p[LeftToeBase] = p[LeftFoot] + toe_offset[0];
  p[RightToeBase] = p[RightFoot] + toe_offset[1];

  if (iterations) *iterations = iter;
  PoseVector out;
  for (std::size_t j = 0; j < kJointCount; ++j) out.set_joint(j, p[j].cast<float>());
  return out;
}

PoseVector bone_length_postprocess(const PoseVector& generated, const BoneLengths& reference_lengths,
                                   const SkeletonTopology& topo) {
  std::array<Eigen::Vector3d, kJointCount> placed;
  placed[0] = generated.joint(0).cast<double>();
  for (std::size_t j = 1; j < kJointCount; ++j) {
    const auto parent = static_cast<std::size_t>(topo.parent[j]);
    placed[j] = reach_toward(placed[parent], generated.joint(j).cast<double>(), reference_lengths[j - 1],
                             topo.reference_direction(j - 1));
  }
  PoseVector out;
  for (std::size_t j = 0; j < kJointCount; ++j) out.set_joint(j, placed[j].cast<float>());
  return out;
}

}  // namespace npe
