#pragma once

#include "npe/fabrik.hpp"
#include "npe/solver.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace npe {

enum class SolveMode { Neural, Fabrik, Both };

std::string to_string(SolveMode mode);
SolveMode parse_solve_mode(std::string_view text);

struct ServiceOptions {
  std::size_t undo_depth = 32;
  FabrikConfig fabrik;
};

struct Residual {
  std::size_t joint = 0;
  double distance = 0.0;
};

struct ModeResult {
  PoseVector pose;
  std::vector<Residual> residuals;
  double solve_ms = 0.0;
};

struct SolveResult {
  std::optional<ModeResult> neural;
  std::optional<ModeResult> fabrik;
};

/// Session state and solve entry points behind the wire protocol. Solves are
/// previews: they read the session pose and never change it. Only commit and
/// undo mutate a session, serialized per session.
class PoseService {
 public:
  explicit PoseService(ServiceOptions options = {});
  explicit PoseService(ModelSet models, ServiceOptions options = {});

  void load_models(ModelSet models);
  bool initialized() const;

  std::string create_session(std::optional<PoseVector> initial_pose = std::nullopt);
  PoseVector session_pose(const std::string& session_id) const;
  SolveResult solve(const std::string& session_id, const std::vector<TargetSpec>& specs, SolveMode mode,
                    bool post_process) const;
  /// Returns the undo depth after the push.
  std::size_t commit(const std::string& session_id, const PoseVector& pose);
  /// Restores the previous pose; throws UndoEmpty at the stack floor.
  PoseVector undo(const std::string& session_id);
  std::size_t undo_depth(const std::string& session_id) const;

  /// Protocol entry point. Never throws: failures become "error" messages.
  /// Every reply echoes the request's correlation_id.
  nlohmann::json handle(const nlohmann::json& request);
  std::string handle_text(std::string_view text);

  nlohmann::json hello_payload() const;

 private:
  struct Session {
    mutable std::mutex mutex;
    PoseVector pose;
    std::deque<PoseVector> undo;
  };

  std::shared_ptr<Session> find(const std::string& session_id) const;
  std::shared_ptr<const ModelSet> models() const;

  ServiceOptions options_;
  mutable std::shared_mutex mutex_;  // guards models_, sessions_ and next_id_
  std::shared_ptr<const ModelSet> models_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::size_t next_id_ = 1;
};

/// Wire helpers shared by the service and its clients.
nlohmann::json pose_to_json(const PoseVector& pose);
PoseVector pose_from_json(const nlohmann::json& value);
nlohmann::json topology_to_json(const SkeletonTopology& topo);
std::vector<TargetSpec> specs_from_json(const nlohmann::json& value);

}  // namespace npe
