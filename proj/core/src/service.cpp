#include "npe/service.hpp"

#include "npe/error.hpp"

#include <chrono>
#include <set>

namespace npe {

using nlohmann::json;

namespace {

std::vector<Residual> residuals_of(const PoseVector& pose, const std::vector<TargetSpec>& specs) {
  std::vector<Residual> out;
  for (const auto& spec : specs) {
    for (std::size_t i = 0; i < spec.joints.size(); ++i) {
      const Eigen::Vector3d d = (pose.joint(spec.joints[i]) - spec.positions[i]).cast<double>();
      out.push_back({spec.joints[i], d.norm()});
    }
  }
  return out;
}

json mode_to_json(const ModeResult& r) {
  json residuals = json::array();
  for (const auto& res : r.residuals) {
    residuals.push_back({{"joint", res.joint},
                         {"joint_name", canonical_topology().joint_names[res.joint]},
                         {"distance", res.distance}});
  }
  return {{"pose", pose_to_json(r.pose)}, {"residuals", residuals}, {"solve_ms", r.solve_ms}};
}

std::size_t parse_joint(const json& value) {
  if (value.is_number_unsigned() || value.is_number_integer()) {
    const auto v = value.get<long long>();
    if (v < 0 || v >= static_cast<long long>(kJointCount)) {
      throw Error(ErrorCode::InvalidTargets, "joint index " + std::to_string(v) + " out of range");
    }
    return static_cast<std::size_t>(v);
  }
  if (value.is_string()) {
    if (auto idx = canonical_topology().index_of(value.get<std::string>())) return *idx;
    throw Error(ErrorCode::InvalidTargets, "unknown joint '" + value.get<std::string>() + "'");
  }
  throw Error(ErrorCode::InvalidTargets, "joint must be an index or a name");
}

const json& field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::InvalidArgument, std::string("missing field '") + key + "'");
  return *it;
}

std::string session_field(const json& request) {
  const json& v = field(request, "session_id");
  if (!v.is_string()) throw Error(ErrorCode::InvalidArgument, "session_id must be a string");
  return v.get<std::string>();
}

}  // namespace

std::string to_string(SolveMode mode) {
  switch (mode) {
    case SolveMode::Neural: return "neural";
    case SolveMode::Fabrik: return "fabrik";
    case SolveMode::Both: return "both";
  }
  return "neural";
}

SolveMode parse_solve_mode(std::string_view text) {
  if (text == "neural") return SolveMode::Neural;
  if (text == "fabrik") return SolveMode::Fabrik;
  if (text == "both") return SolveMode::Both;
  throw Error(ErrorCode::InvalidArgument, "mode must be neural, fabrik or both");
}

json pose_to_json(const PoseVector& pose) {
  json out = json::array();
  for (float v : pose.values) out.push_back(v);
  return out;
}

PoseVector pose_from_json(const json& value) {
  if (!value.is_array()) throw Error(ErrorCode::DimensionMismatch, "pose must be an array of 63 numbers");
  std::vector<double> values;
  values.reserve(value.size());
  for (const auto& v : value) {
    if (!v.is_number()) throw Error(ErrorCode::NonFiniteInput, "pose entries must be numbers");
    values.push_back(v.get<double>());
  }
  return PoseVector::from_values(std::span<const double>(values));
}

json topology_to_json(const SkeletonTopology& topo) {
  json names = json::array(), parents = json::array(), lengths = json::array(), offsets = json::array();
  for (std::size_t i = 0; i < kJointCount; ++i) {
    names.push_back(topo.joint_names[i]);
    parents.push_back(topo.parent[i]);
    offsets.push_back({topo.reference_offsets[i].x(), topo.reference_offsets[i].y(), topo.reference_offsets[i].z()});
  }
  for (double l : topo.reference_bone_lengths) lengths.push_back(l);
  return {{"joint_names", names},
          {"parents", parents},
          {"reference_offsets", offsets},
          {"reference_bone_lengths", lengths},
          {"reference_pose", pose_to_json(topo.reference_pose())}};
}

std::vector<TargetSpec> specs_from_json(const json& value) {
  if (!value.is_array()) throw Error(ErrorCode::InvalidTargets, "specs must be an array");
  std::vector<TargetSpec> specs;
  for (const auto& s : value) {
    if (!s.is_object()) throw Error(ErrorCode::InvalidTargets, "each spec must be an object");
    const json& joints = field(s, "joints");
    const json& positions = field(s, "positions");
    if (!joints.is_array() || !positions.is_array() || joints.size() != positions.size()) {
      throw Error(ErrorCode::InvalidTargets, "joints and positions must be arrays of equal length");
    }
    TargetSpec spec;
    for (const auto& j : joints) spec.joints.push_back(parse_joint(j));
    for (const auto& p : positions) {
      if (!p.is_array() || p.size() != 3) throw Error(ErrorCode::InvalidTargets, "positions are [x, y, z] triples");
      Eigen::Vector3f v;
      for (int k = 0; k < 3; ++k) {
        if (!p[static_cast<std::size_t>(k)].is_number()) throw Error(ErrorCode::InvalidTargets, "non-numeric target");
        v[k] = p[static_cast<std::size_t>(k)].get<float>();
      }
      spec.positions.push_back(v);
    }
    spec.validate();
    specs.push_back(std::move(spec));
  }
  return specs;
}

PoseService::PoseService(ServiceOptions options) : options_(std::move(options)) { options_.fabrik.validate(); }

PoseService::PoseService(ModelSet models, ServiceOptions options) : PoseService(std::move(options)) {
  load_models(std::move(models));
}

void PoseService::load_models(ModelSet models) {
  auto shared = std::make_shared<const ModelSet>(std::move(models));
  std::unique_lock lock(mutex_);
  models_ = std::move(shared);
}

bool PoseService::initialized() const {
  std::shared_lock lock(mutex_);
  return models_ != nullptr;
}

std::shared_ptr<const ModelSet> PoseService::models() const {
  std::shared_lock lock(mutex_);
  if (!models_) throw Error(ErrorCode::ServiceNotInitialized, "no models loaded");
  return models_;
}

std::shared_ptr<PoseService::Session> PoseService::find(const std::string& session_id) const {
  std::shared_lock lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "unknown session '" + session_id + "'");
  return it->second;
}

std::string PoseService::create_session(std::optional<PoseVector> initial_pose) {
  const auto m = models();
  if (initial_pose && !initial_pose->is_finite()) throw Error(ErrorCode::NonFiniteInput, "initial pose is not finite");
  auto session = std::make_shared<Session>();
  session->pose = initial_pose ? *initial_pose : denormalize(PoseFeatures::Zero(), m->autoencoder.stats());
  std::unique_lock lock(mutex_);
  std::string id = "s" + std::to_string(next_id_++);
  sessions_.emplace(id, std::move(session));
  return id;
}

PoseVector PoseService::session_pose(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  return s->pose;
}

SolveResult PoseService::solve(const std::string& session_id, const std::vector<TargetSpec>& specs, SolveMode mode,
                               bool post_process) const {
  const auto m = models();
  const PoseVector start = session_pose(session_id);
  std::set<std::size_t> used;
  for (const auto& spec : specs) {
    spec.validate();
    for (std::size_t j : spec.joints) {
      if (!used.insert(j).second) throw Error(ErrorCode::OverlappingTargets, "joint listed in two target sets");
    }
  }

  using Clock = std::chrono::steady_clock;
  SolveResult result;
  if (mode != SolveMode::Fabrik) {
    ModeResult r;
    const auto t0 = Clock::now();
    r.pose = specs.empty() ? start : compose_solvers(start, specs, *m, post_process);
    r.solve_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    r.residuals = residuals_of(r.pose, specs);
    result.neural = std::move(r);
  }
  if (mode != SolveMode::Neural) {
    std::vector<JointTarget> targets;
    for (const auto& spec : specs) {
      for (std::size_t i = 0; i < spec.joints.size(); ++i) targets.push_back({spec.joints[i], spec.positions[i]});
    }
    ModeResult r;
    const auto t0 = Clock::now();
    r.pose = targets.empty() ? start : fabrik_solve_fullbody(start, canonical_topology(), targets, options_.fabrik);
    r.solve_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    r.residuals = residuals_of(r.pose, specs);
    result.fabrik = std::move(r);
  }
  return result;
}

std::size_t PoseService::commit(const std::string& session_id, const PoseVector& pose) {
  if (!pose.is_finite()) throw Error(ErrorCode::NonFiniteInput, "committed pose is not finite");
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  s->undo.push_back(s->pose);
  while (s->undo.size() > options_.undo_depth) s->undo.pop_front();
  s->pose = pose;
  return s->undo.size();
}

PoseVector PoseService::undo(const std::string& session_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  if (s->undo.empty()) throw Error(ErrorCode::UndoEmpty, "nothing to undo");
  s->pose = s->undo.back();
  s->undo.pop_back();
  return s->pose;
}

std::size_t PoseService::undo_depth(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  return s->undo.size();
}

json PoseService::hello_payload() const {
  json solvers = json::array();
  if (auto m = [&] {
        std::shared_lock lock(mutex_);
        return models_;
      }()) {
    for (const auto& s : m->solvers) {
      json names = json::array();
      for (std::size_t j : s.target_joints) names.push_back(canonical_topology().joint_names[j]);
      solvers.push_back({{"name", s.name}, {"joints", s.target_joints}, {"joint_names", names}});
    }
  }
  json effectors = json::array();
  for (std::size_t j = 0; j < kJointCount; ++j) {
    if (is_fullbody_effector(j)) effectors.push_back(j);
  }
  return {{"type", "hello"},
          {"protocol", "npe-pose/1"},
          {"initialized", initialized()},
          {"topology", topology_to_json(canonical_topology())},
          {"solvers", solvers},
          {"fabrik_effectors", effectors},
          {"modes", {"neural", "fabrik", "both"}}};
}

json PoseService::handle(const json& request) {
  json correlation = nullptr;
  if (request.is_object()) {
    if (auto it = request.find("correlation_id"); it != request.end()) correlation = *it;
  }
  json reply;
  try {
    if (!request.is_object()) throw Error(ErrorCode::InvalidArgument, "request must be an object");
    const json& type_field = field(request, "type");
    if (!type_field.is_string()) throw Error(ErrorCode::InvalidArgument, "type must be a string");
    const std::string type = type_field.get<std::string>();

    if (type == "hello") {
      reply = hello_payload();
    } else if (type == "create_session") {
      std::optional<PoseVector> initial;
      if (auto it = request.find("initial_pose"); it != request.end() && !it->is_null()) {
        initial = pose_from_json(*it);
      }
      const std::string id = create_session(initial);
      reply = {{"type", "session_created"},
               {"session_id", id},
               {"pose", pose_to_json(session_pose(id))},
               {"topology", topology_to_json(canonical_topology())}};
    } else if (type == "solve") {
      const std::string id = session_field(request);
      std::vector<TargetSpec> specs;
      if (auto it = request.find("specs"); it != request.end()) specs = specs_from_json(*it);
      const SolveMode mode = parse_solve_mode(request.value("mode", std::string("neural")));
      const bool post = request.value("post_process", false);
      const SolveResult r = solve(id, specs, mode, post);
      json results = json::object();
      if (r.neural) results["neural"] = mode_to_json(*r.neural);
      if (r.fabrik) results["fabrik"] = mode_to_json(*r.fabrik);
      reply = {{"type", "solve_result"},
               {"session_id", id},
               {"mode", to_string(mode)},
               {"post_process", post},
               {"results", results}};
    } else if (type == "commit") {
      const std::string id = session_field(request);
      const std::size_t depth = commit(id, pose_from_json(field(request, "pose")));
      reply = {{"type", "committed"}, {"session_id", id}, {"undo_depth", depth}};
    } else if (type == "undo") {
      const std::string id = session_field(request);
      const PoseVector pose = undo(id);
      reply = {{"type", "undone"}, {"session_id", id}, {"pose", pose_to_json(pose)}, {"undo_depth", undo_depth(id)}};
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown message type '" + type + "'");
    }
  } catch (const Error& e) {
    reply = {{"type", "error"}, {"code", std::string(to_string(e.code()))}, {"message", e.what()}};
  } catch (const std::exception& e) {
    reply = {{"type", "error"}, {"code", "invalid_argument"}, {"message", e.what()}};
  }
  reply["correlation_id"] = correlation;
  return reply;
}

std::string PoseService::handle_text(std::string_view text) {
  json request;
  try {
    request = json::parse(text);
  } catch (const json::parse_error& e) {
    return json{{"type", "error"}, {"code", "malformed_syntax"}, {"message", e.what()}, {"correlation_id", nullptr}}
        .dump();
  }
  return handle(request).dump();
}

}  // namespace npe
