#include "npe/synth.hpp"

#include "npe/bvh.hpp"
#include "npe/config.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace npe {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct SourceJoint {
  const char* name;
  int parent;
  Eigen::Vector3d offset;  // meters, before actor scaling
  bool end_site;
};

// CMU-style hierarchy. LHipJoint, RHipJoint, LowerBack and Neck carry no
// length, as in the CMU exports.
const std::vector<SourceJoint>& source_skeleton() {
  static const std::vector<SourceJoint> joints = [] {
    std::vector<SourceJoint> j;
    auto add = [&](const char* name, int parent, Eigen::Vector3d off, bool end = false) {
      j.push_back({name, parent, off, end});
      return static_cast<int>(j.size() - 1);
    };
    const int hips = add("Hips", -1, {0, 0, 0});
    for (int side = 0; side < 2; ++side) {
      const double s = side == 0 ? 1.0 : -1.0;
      const std::string p = side == 0 ? "Left" : "Right";
      static std::array<std::string, 12> names;  // keep c_str() alive
      const int base = side * 6;
      names[base + 0] = side == 0 ? "LHipJoint" : "RHipJoint";
      names[base + 1] = p + "UpLeg";
      names[base + 2] = p + "Leg";
      names[base + 3] = p + "Foot";
      names[base + 4] = p + "ToeBase";
      names[base + 5] = p + "ToeBase_End";
      const int hj = add(names[base + 0].c_str(), hips, {0, 0, 0});
      const int up = add(names[base + 1].c_str(), hj, {s * 0.09, -0.06, 0});
      const int leg = add(names[base + 2].c_str(), up, {0, -0.42, 0});
      const int foot = add(names[base + 3].c_str(), leg, {0, -0.40, 0});
      const int toe = add(names[base + 4].c_str(), foot, {0, -0.05, 0.13});
      add(names[base + 5].c_str(), toe, {0, 0, 0.06}, true);
    }
    const int lower = add("LowerBack", hips, {0, 0, 0});
    const int spine = add("Spine", lower, {0, 0.12, -0.01});
    const int spine1 = add("Spine1", spine, {0, 0.14, 0.01});
    const int neck = add("Neck", spine1, {0, 0, 0});
    const int neck1 = add("Neck1", neck, {0, 0.20, -0.01});
    const int head = add("Head", neck1, {0, 0.12, 0.02});
    add("Head_End", head, {0, 0.10, 0}, true);
    static std::array<std::string, 18> arm_names;
    for (int side = 0; side < 2; ++side) {
      const double s = side == 0 ? 1.0 : -1.0;
      const std::string p = side == 0 ? "Left" : "Right";
      const std::string l = side == 0 ? "L" : "R";
      const int b = side * 9;
      arm_names[b + 0] = p + "Shoulder";
      arm_names[b + 1] = p + "Arm";
      arm_names[b + 2] = p + "ForeArm";
      arm_names[b + 3] = p + "Hand";
      arm_names[b + 4] = p + "FingerBase";
      arm_names[b + 5] = p + "HandIndex1";
      arm_names[b + 6] = p + "HandIndex1_End";
      arm_names[b + 7] = l + "Thumb";
      arm_names[b + 8] = l + "Thumb_End";
      const int sh = add(arm_names[b + 0].c_str(), spine1, {s * 0.03, 0.17, 0});
      const int arm = add(arm_names[b + 1].c_str(), sh, {s * 0.15, 0, 0});
      const int fore = add(arm_names[b + 2].c_str(), arm, {s * 0.28, 0, 0});
      const int hand = add(arm_names[b + 3].c_str(), fore, {s * 0.25, 0, 0});
      const int fb = add(arm_names[b + 4].c_str(), hand, {0, 0, 0});
      const int idx = add(arm_names[b + 5].c_str(), fb, {s * 0.05, 0, 0});
      add(arm_names[b + 6].c_str(), idx, {s * 0.04, 0, 0}, true);
      const int th = add(arm_names[b + 7].c_str(), hand, {0, 0, 0});
      add(arm_names[b + 8].c_str(), th, {s * 0.03, 0, 0.03}, true);
    }
    return j;
  }();
  return joints;
}

int source_index(const char* name) {
  const auto& s = source_skeleton();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (std::string_view(s[i].name) == name) return static_cast<int>(i);
  }
  return -1;
}

// Anatomical controls, angles in degrees.
struct ArmControls {
  double clavicle = 0, azimuth = 0, elevation = -80, twist = 0, elbow = 10, wrist = 0;
};
struct LegControls {
  double flex = 0, abduction = 3, rotation = 0, knee = 3, ankle = 0;
};
struct Controls {
  double root_x = 0, root_z = 0, heading = 0, pelvis_tilt = 0, pelvis_roll = 0;
  double spine_flex = 0, spine_lateral = 0, spine_twist = 0;
  double neck_flex = 0, neck_turn = 0, head_flex = 0;
  std::array<ArmControls, 2> arm;
  std::array<LegControls, 2> leg;
};

Eigen::Matrix3d rx(double deg) { return Eigen::AngleAxisd(deg * kDeg, Eigen::Vector3d::UnitX()).toRotationMatrix(); }
Eigen::Matrix3d ry(double deg) { return Eigen::AngleAxisd(deg * kDeg, Eigen::Vector3d::UnitY()).toRotationMatrix(); }
Eigen::Matrix3d rz(double deg) { return Eigen::AngleAxisd(deg * kDeg, Eigen::Vector3d::UnitZ()).toRotationMatrix(); }

std::vector<Eigen::Matrix3d> local_rotations(const Controls& c) {
  const auto& skel = source_skeleton();
  std::vector<Eigen::Matrix3d> r(skel.size(), Eigen::Matrix3d::Identity());
  auto at = [&](const char* name) -> Eigen::Matrix3d& { return r[static_cast<std::size_t>(source_index(name))]; };

  at("Hips") = ry(c.heading) * rx(c.pelvis_tilt) * rz(c.pelvis_roll);
  const Eigen::Matrix3d half_spine = rx(c.spine_flex / 2) * rz(c.spine_lateral / 2) * ry(c.spine_twist / 2);
  at("Spine") = half_spine;
  at("Spine1") = half_spine;
  at("Neck1") = rx(c.neck_flex) * ry(c.neck_turn / 2);
  at("Head") = rx(c.head_flex) * ry(c.neck_turn / 2);

  const ArmControls& la = c.arm[0];
  at("LeftShoulder") = rz(la.clavicle);
  at("LeftArm") = ry(-la.azimuth) * rz(la.elevation) * rx(la.twist);
  at("LeftForeArm") = ry(-la.elbow);
  at("LeftHand") = rz(la.wrist);
  const ArmControls& ra = c.arm[1];
  at("RightShoulder") = rz(-ra.clavicle);
  at("RightArm") = ry(ra.azimuth) * rz(-ra.elevation) * rx(-ra.twist);
  at("RightForeArm") = ry(ra.elbow);
  at("RightHand") = rz(-ra.wrist);

  const LegControls& ll = c.leg[0];
  at("LeftUpLeg") = rx(-ll.flex) * rz(ll.abduction) * ry(ll.rotation);
  at("LeftLeg") = rx(ll.knee);
  at("LeftFoot") = rx(ll.ankle);
  const LegControls& rl = c.leg[1];
  at("RightUpLeg") = rx(-rl.flex) * rz(-rl.abduction) * ry(-rl.rotation);
  at("RightLeg") = rx(rl.knee);
  at("RightFoot") = rx(rl.ankle);
  return r;
}

// Lowest point of the feet with the hips at the origin, meters.
double foot_floor(const std::vector<Eigen::Matrix3d>& rot) {
  const auto& skel = source_skeleton();
  std::vector<Eigen::Matrix3d> world_r(skel.size());
  std::vector<Eigen::Vector3d> world_p(skel.size());
  double lowest = 0.0;
  for (std::size_t i = 0; i < skel.size(); ++i) {
    if (skel[i].parent < 0) {
      world_r[i] = rot[i];
      world_p[i].setZero();
    } else {
      const auto p = static_cast<std::size_t>(skel[i].parent);
      world_p[i] = world_p[p] + world_r[p] * skel[i].offset;
      world_r[i] = world_r[p] * rot[i];
    }
    lowest = std::min(lowest, world_p[i].y());
  }
  return lowest;
}

// Piecewise smoothstep interpolation between random keys.
class KeyTrack {
 public:
  KeyTrack() = default;
  KeyTrack(std::mt19937_64& rng, double duration, double min_gap, double max_gap, double lo, double hi) {
    std::uniform_real_distribution<double> gap(min_gap, max_gap), value(lo, hi);
    double t = 0.0;
    while (true) {
      keys_.push_back({t, value(rng)});
      if (t > duration) break;
      t += gap(rng);
    }
  }

  double operator()(double t) const {
    if (keys_.empty()) return 0.0;
    auto it = std::upper_bound(keys_.begin(), keys_.end(), t, [](double v, const Key& k) { return v < k.t; });
    if (it == keys_.begin()) return keys_.front().v;
    if (it == keys_.end()) return keys_.back().v;
    const Key& b = *it;
    const Key& a = *(it - 1);
    const double u = (t - a.t) / (b.t - a.t);
    const double s = u * u * (3.0 - 2.0 * u);
    return a.v + (b.v - a.v) * s;
  }

 private:
  struct Key {
    double t, v;
  };
  std::vector<Key> keys_;
};

class MotionGenerator {
 public:
  MotionGenerator(const SynthClipOptions& o, double duration) : opt_(o), rng_(o.seed), duration_(duration) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    heading0_ = 360.0 * u(rng_);
    heading_track_ = track(2.0, 5.0, -40.0, 40.0);
    sway_ = track(1.0, 3.0, -1.0, 1.0);
    switch (o.family) {
      case MotionFamily::Walk: setup_walk(); break;
      case MotionFamily::Reach: setup_free(0.5, 1.4, false); break;
      case MotionFamily::Freestyle: setup_free(0.4, 1.1, true); break;
      case MotionFamily::Squat: setup_squat(); break;
      case MotionFamily::Jacks: setup_jacks(); break;
    }
  }

  Controls at(double t) const {
    Controls c;
    c.heading = heading0_ + heading_track_(t);
    switch (opt_.family) {
      case MotionFamily::Walk: walk(t, c); break;
      case MotionFamily::Reach:
      case MotionFamily::Freestyle: free(t, c); break;
      case MotionFamily::Squat: squat(t, c); break;
      case MotionFamily::Jacks: jacks(t, c); break;
    }
    return c;
  }

 private:
  KeyTrack track(double min_gap, double max_gap, double lo, double hi) {
    return KeyTrack(rng_, duration_, min_gap, max_gap, lo, hi);
  }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  void setup_walk() {
    cadence_ = uniform(0.8, 1.5);  // strides per second
    stride_amp_ = uniform(15.0, 38.0);
    knee_amp_ = stride_amp_ * uniform(1.6, 2.4);
    arm_amp_ = uniform(8.0, 35.0);
    speed_ = cadence_ * stride_amp_ * uniform(0.03, 0.045);
    lean_ = track(1.0, 3.0, -5.0, 20.0);
    elbow_ = track(1.0, 3.0, 5.0, 70.0);
    look_ = track(1.0, 3.0, -40.0, 40.0);
    spread_ = track(1.0, 3.0, -15.0, 20.0);
  }

  void setup_free(double min_gap, double max_gap, bool legs_free) {
    legs_free_ = legs_free;
    for (int s = 0; s < 2; ++s) {
      az_[s] = track(min_gap, max_gap, -30.0, 120.0);
      el_[s] = track(min_gap, max_gap, -88.0, 80.0);
      twist_[s] = track(min_gap, max_gap, -60.0, 60.0);
      elbow_s_[s] = track(min_gap, max_gap, 0.0, 140.0);
      clav_[s] = track(min_gap, max_gap, -5.0, 20.0);
      wrist_[s] = track(min_gap, max_gap, -30.0, 30.0);
      hip_[s] = legs_free ? track(min_gap, max_gap, -25.0, 85.0) : track(min_gap, max_gap, -5.0, 20.0);
      knee_[s] = legs_free ? track(min_gap, max_gap, 0.0, 120.0) : track(min_gap, max_gap, 0.0, 30.0);
      abd_[s] = legs_free ? track(min_gap, max_gap, -5.0, 40.0) : track(min_gap, max_gap, 0.0, 15.0);
      legrot_[s] = track(min_gap, max_gap, -20.0, 20.0);
      ankle_[s] = track(min_gap, max_gap, -15.0, 25.0);
    }
    lean_ = track(min_gap, max_gap, -10.0, 50.0);
    lateral_ = track(min_gap, max_gap, -20.0, 20.0);
    twist_body_ = track(min_gap, max_gap, -35.0, 35.0);
    look_ = track(min_gap, max_gap, -50.0, 50.0);
    nod_ = track(min_gap, max_gap, -25.0, 35.0);
  }

  void setup_squat() {
    period_ = uniform(1.8, 4.0);
    depth_ = track(2.0, 4.0, 0.3, 1.0);
    for (int s = 0; s < 2; ++s) {
      az_[s] = track(0.8, 2.0, 40.0, 100.0);
      el_[s] = track(0.8, 2.0, -80.0, 30.0);
      elbow_s_[s] = track(0.8, 2.0, 0.0, 120.0);
      twist_[s] = track(0.8, 2.0, -40.0, 40.0);
      abd_[s] = track(2.0, 4.0, 5.0, 30.0);
    }
    look_ = track(1.0, 3.0, -30.0, 30.0);
  }

  void setup_jacks() {
    period_ = uniform(0.8, 1.6);
    for (int s = 0; s < 2; ++s) {
      elbow_s_[s] = track(1.0, 3.0, 0.0, 50.0);
      az_[s] = track(1.0, 3.0, -15.0, 30.0);
    }
    amp_ = track(2.0, 4.0, 0.5, 1.0);
    look_ = track(1.0, 3.0, -20.0, 20.0);
  }

  void walk(double t, Controls& c) const {
    const double phase = 2.0 * std::numbers::pi * cadence_ * t;
    const double swing = std::sin(phase);
    // Straight-line approximation of the travelled path; only the pose matters downstream.
    const double dist = speed_ * t;
    const double h = (heading0_ + heading_track_(t)) * kDeg;
    c.root_x = dist * std::sin(h);
    c.root_z = dist * std::cos(h);
    c.pelvis_tilt = 3.0 + 0.25 * lean_(t);
    c.pelvis_roll = 4.0 * std::sin(phase) * stride_amp_ / 30.0;
    c.spine_flex = lean_(t);
    c.spine_twist = -0.3 * stride_amp_ * swing;
    c.neck_turn = look_(t);
    c.neck_flex = -0.3 * lean_(t);
    for (int s = 0; s < 2; ++s) {
      const double side = s == 0 ? 1.0 : -1.0;
      const double leg_phase = phase + (s == 0 ? 0.0 : std::numbers::pi);
      LegControls& l = c.leg[s];
      l.flex = 5.0 + stride_amp_ * std::sin(leg_phase);
      l.knee = 5.0 + knee_amp_ * std::max(0.0, std::sin(leg_phase + 1.1));
      l.ankle = 8.0 * std::sin(leg_phase - 0.6);
      l.abduction = 3.0;
      ArmControls& a = c.arm[s];
      // Arm swings opposite to the leg on the same side.
      a.azimuth = 90.0 + 10.0 * side * sway_(t);
      a.elevation = -90.0 - arm_amp_ * std::sin(leg_phase);
      a.elbow = elbow_(t) + 0.4 * arm_amp_ * std::max(0.0, -std::sin(leg_phase));
      a.clavicle = 3.0;
      a.twist = spread_(t);
    }
  }

  void free(double t, Controls& c) const {
    c.root_x = 0.4 * sway_(t);
    c.root_z = 0.3 * sway_(t + 7.0);
    c.spine_flex = lean_(t);
    c.spine_lateral = lateral_(t);
    c.spine_twist = twist_body_(t);
    c.pelvis_tilt = 0.3 * lean_(t);
    c.neck_turn = look_(t);
    c.neck_flex = 0.5 * nod_(t) - 0.3 * lean_(t);
    c.head_flex = 0.5 * nod_(t);
    for (int s = 0; s < 2; ++s) {
      ArmControls& a = c.arm[s];
      a.azimuth = az_[s](t);
      a.elevation = el_[s](t);
      a.twist = twist_[s](t);
      a.elbow = elbow_s_[s](t);
      a.clavicle = clav_[s](t);
      a.wrist = wrist_[s](t);
      LegControls& l = c.leg[s];
      l.flex = hip_[s](t);
      l.knee = std::max(knee_[s](t), legs_free_ ? 0.0 : 0.8 * l.flex);
      l.abduction = abd_[s](t);
      l.rotation = legrot_[s](t);
      l.ankle = ankle_[s](t);
    }
  }

  void squat(double t, Controls& c) const {
    const double s = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * t / period_));
    const double d = depth_(t) * s;
    c.root_x = 0.1 * sway_(t);
    c.spine_flex = 10.0 + 45.0 * d;
    c.pelvis_tilt = 15.0 * d;
    c.neck_flex = -25.0 * d;
    c.neck_turn = look_(t);
    for (int i = 0; i < 2; ++i) {
      LegControls& l = c.leg[i];
      l.flex = 100.0 * d;
      l.knee = 125.0 * d;
      l.ankle = 35.0 * d;
      l.abduction = abd_[i](t);
      ArmControls& a = c.arm[i];
      a.azimuth = az_[i](t);
      a.elevation = el_[i](t) * (1.0 - d) + (-10.0) * d;
      a.elbow = elbow_s_[i](t);
      a.twist = twist_[i](t);
    }
  }

  void jacks(double t, Controls& c) const {
    const double s = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * t / period_));
    const double a = amp_(t) * s;
    c.neck_turn = look_(t);
    c.spine_flex = 5.0 * a;
    for (int i = 0; i < 2; ++i) {
      ArmControls& arm = c.arm[i];
      arm.azimuth = az_[i](t);
      arm.elevation = -85.0 + 165.0 * a;
      arm.elbow = elbow_s_[i](t);
      arm.clavicle = 15.0 * a;
      LegControls& l = c.leg[i];
      l.abduction = 3.0 + 22.0 * a;
      l.knee = 10.0 * (1.0 - std::abs(2.0 * s - 1.0));
      l.flex = 0.5 * l.knee;
    }
  }

  SynthClipOptions opt_;
  std::mt19937_64 rng_;
  double duration_;
  double heading0_ = 0.0;
  KeyTrack heading_track_, sway_, lean_, lateral_, twist_body_, look_, nod_, elbow_, spread_, depth_, amp_;
  double cadence_ = 1.0, stride_amp_ = 25.0, knee_amp_ = 50.0, arm_amp_ = 20.0, speed_ = 1.0, period_ = 2.0;
  bool legs_free_ = false;
  std::array<KeyTrack, 2> az_, el_, twist_, elbow_s_, clav_, wrist_, hip_, knee_, abd_, legrot_, ankle_;
};

std::array<int, 3> euler_axes(EulerStyle style) {
  return style == EulerStyle::ZYX ? std::array<int, 3>{2, 1, 0} : std::array<int, 3>{2, 0, 1};
}

const char* axis_channel(int axis) {
  static const char* names[] = {"Xrotation", "Yrotation", "Zrotation"};
  return names[axis];
}

void append_number(std::string& out, double v) {
  char buf[48];
  const int n = std::snprintf(buf, sizeof buf, "%.6f", v);
  // Avoid "-0.000000" noise.
  if (std::string_view(buf, static_cast<std::size_t>(n)) == "-0.000000") {
    out += "0.000000";
  } else {
    out.append(buf, static_cast<std::size_t>(n));
  }
}

}  // namespace

std::string to_string(MotionFamily family) {
  switch (family) {
    case MotionFamily::Walk: return "walk";
    case MotionFamily::Reach: return "reach";
    case MotionFamily::Squat: return "squat";
    case MotionFamily::Jacks: return "jacks";
    case MotionFamily::Freestyle: return "freestyle";
  }
  return "unknown";
}

std::string synthesize_bvh(const SynthClipOptions& options) {
  const auto& skel = source_skeleton();
  const double to_units = options.actor_scale / kCmuUnitScale;
  const auto axes = euler_axes(options.style);

  std::string out = "HIERARCHY\n";
  std::vector<int> depth(skel.size(), 0);
  auto indent = [&](int d) { out.append(static_cast<std::size_t>(2 * d), ' '); };
  auto close_to = [&](int target_depth, int& open) {
    while (open > target_depth) {
      --open;
      indent(open);
      out += "}\n";
    }
  };
  int open = 0;
  for (std::size_t i = 0; i < skel.size(); ++i) {
    const SourceJoint& j = skel[i];
    depth[i] = j.parent < 0 ? 0 : depth[static_cast<std::size_t>(j.parent)] + 1;
    close_to(depth[i], open);
    indent(depth[i]);
    if (j.parent < 0) {
      out += "ROOT ";
      out += j.name;
    } else if (j.end_site) {
      out += "End Site";
    } else {
      out += "JOINT ";
      out += j.name;
    }
    out += "\n";
    indent(depth[i]);
    out += "{\n";
    indent(depth[i] + 1);
    out += "OFFSET ";
    for (int k = 0; k < 3; ++k) {
      append_number(out, j.offset[k] * to_units);
      out += k < 2 ? " " : "\n";
    }
    if (!j.end_site) {
      indent(depth[i] + 1);
      if (j.parent < 0) {
        out += "CHANNELS 6 Xposition Yposition Zposition";
      } else {
        out += "CHANNELS 3";
      }
      for (int a : axes) {
        out += ' ';
        out += axis_channel(a);
      }
      out += "\n";
    }
    open = depth[i] + 1;
  }
  close_to(0, open);

  const std::size_t frames = std::max<std::size_t>(options.frames, 1);
  out += "MOTION\nFrames: " + std::to_string(frames) + "\nFrame Time: ";
  append_number(out, options.frame_time);
  out += "\n";

  const double duration = static_cast<double>(frames) * options.frame_time;
  MotionGenerator gen(options, duration);

  std::mt19937_64 glitch_rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> glitch_frames;
  if (options.inject_jitter && frames > 4) {
    std::uniform_int_distribution<std::size_t> pick(1, frames - 2);
    const std::size_t count = 1 + glitch_rng() % 3;
    for (std::size_t g = 0; g < count; ++g) glitch_frames.push_back(pick(glitch_rng));
  }

  for (std::size_t f = 0; f < frames; ++f) {
    Controls c = gen.at(static_cast<double>(f) * options.frame_time);
    if (std::find(glitch_frames.begin(), glitch_frames.end(), f) != glitch_frames.end()) {
      // A single-frame marker swap: one arm snaps far away and back.
      c.arm[f % 2].elevation += 150.0;
      c.arm[f % 2].azimuth -= 120.0;
      c.spine_twist += 80.0;
    }
    const auto rot = local_rotations(c);
    const double hips_height = -foot_floor(rot);
    for (std::size_t i = 0; i < skel.size(); ++i) {
      if (skel[i].end_site) continue;
      if (skel[i].parent < 0) {
        append_number(out, c.root_x * to_units);
        out += ' ';
        append_number(out, hips_height * to_units);
        out += ' ';
        append_number(out, c.root_z * to_units);
        out += ' ';
      }
      const Eigen::Vector3d e = rot[i].eulerAngles(axes[0], axes[1], axes[2]) / kDeg;
      for (int k = 0; k < 3; ++k) {
        append_number(out, e[k]);
        out += ' ';
      }
    }
    out.back() = '\n';
  }
  return out;
}

std::vector<SynthClipFile> synthesize_corpus(const SynthCorpusOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> frames(options.min_frames, std::max(options.min_frames, options.max_frames));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  static constexpr std::array<MotionFamily, 5> families = {MotionFamily::Walk, MotionFamily::Reach,
                                                           MotionFamily::Freestyle, MotionFamily::Squat,
                                                           MotionFamily::Jacks};
  // Weights favour the families with the widest pose coverage.
  std::discrete_distribution<int> family_pick({3.0, 4.0, 3.0, 1.5, 1.0});

  std::vector<SynthClipFile> files;
  files.reserve(options.clips);
  for (std::size_t i = 0; i < options.clips; ++i) {
    SynthClipOptions clip;
    clip.family = families[static_cast<std::size_t>(family_pick(rng))];
    clip.frames = frames(rng);
    clip.frame_time = options.frame_time;
    clip.actor_scale = 0.92 + 0.16 * unit(rng);
    clip.style = unit(rng) < 0.7 ? EulerStyle::ZYX : EulerStyle::ZXY;
    clip.inject_jitter = unit(rng) < options.jitter_fraction;
    clip.seed = rng();
    char name[64];
    std::snprintf(name, sizeof name, "%03zu_%s.bvh", i, to_string(clip.family).c_str());
    files.push_back({name, synthesize_bvh(clip), clip});
  }
  return files;
}

std::string synthetic_mapping_text() {
  std::string out =
      "# CMU-style skeleton -> canonical joints\n"
      "unit_scale = 0.056444\n"
      "up_axis = Y\n";
  const char* same[] = {"Hips",         "Spine",         "Spine1",       "Head",          "LeftShoulder",
                        "LeftArm",      "LeftForeArm",   "LeftHand",     "RightShoulder", "RightArm",
                        "RightForeArm", "RightHand",     "LeftUpLeg",    "LeftLeg",       "LeftFoot",
                        "LeftToeBase",  "RightUpLeg",    "RightLeg",     "RightFoot",     "RightToeBase"};
  for (const char* n : same) out += std::string(n) + " = " + n + "\n";
  out += "Neck = Neck1\n";
  return out;
}

std::vector<SynthClipFile> write_synthetic_corpus(const std::filesystem::path& dir, const SynthCorpusOptions& options) {
  std::filesystem::create_directories(dir);
  auto files = synthesize_corpus(options);
  for (const auto& f : files) write_text_file(dir / f.filename, f.text);
  write_text_file(dir / "cmu_style.map", synthetic_mapping_text());
  return files;
}

}  // namespace npe
