#pragma once

#include "npe/solver.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace npe {

// A model directory holds:
//   ae.npw / ae.meta                  autoencoder weights and descriptor (stats included)
//   solver_<name>.npw / .meta         one pair per solver; the descriptor lists the
//                                     target joints, k and the hash of the stats used

void save_autoencoder(const PoseAutoencoder& ae, const std::filesystem::path& dir);
PoseAutoencoder load_autoencoder(const std::filesystem::path& dir);

void save_solver(const SolverModel& solver, const std::filesystem::path& dir);
SolverModel load_solver(const std::filesystem::path& meta_path);

/// Loads the autoencoder and every solver descriptor found in `dir`. Solvers
/// trained against different normalization stats are rejected.
ModelSet load_model_set(const std::filesystem::path& dir);

std::filesystem::path solver_weights_path(const std::filesystem::path& dir, const std::string& name);

/// Serialized weight bytes of the autoencoder plus the named solvers.
std::size_t weight_footprint_bytes(const ModelSet& models, const std::vector<std::string>& solver_names);

/// Parses "LeftHand,RightHand" or "8,12" into canonical indices.
std::vector<std::size_t> parse_joint_list(const std::string& text);
std::string format_joint_list(const std::vector<std::size_t>& joints);

/// Solver sets shipped by default: hands, feet (ankles) and head.
struct SolverPreset {
  std::string name;
  std::vector<std::size_t> joints;
};
const std::vector<SolverPreset>& standard_solver_presets();

}  // namespace npe
