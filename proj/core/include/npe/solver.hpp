#pragma once

#include "npe/autoencoder.hpp"
#include "npe/dataset.hpp"
#include "npe/nn.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace npe {

/// Joints to move and where to put them (meters, root-relative).
struct TargetSpec {
  std::vector<std::size_t> joints;
  std::vector<Eigen::Vector3f> positions;

  /// Distinct in-range joints, one finite position each; throws InvalidTargets.
  void validate() const;
};

struct SolverConfig {
  std::size_t hidden_width = 126;
  std::size_t hidden_layers = 3;
  std::size_t epochs = 5;
  std::size_t batch_size = 256;
  double learning_rate = 1e-4;
  double k = 0.01;  // weight of the non-target term
  std::uint64_t seed = 0;
  // Feed target positions through the pose feature statistics.
  bool normalize_targets = true;

  void validate() const;
  std::string describe() const;
};

/// Network mapping (latent, targets) to a latent pose for one fixed joint set.
struct SolverModel {
  std::string name;
  std::vector<std::size_t> target_joints;
  Mlp<float> network;  // (d + 3n) -> hidden... -> d
  double k = 0.01;
  bool normalize_targets = true;
  std::uint64_t stats_hash = 0;

  static SolverModel create(std::string name, std::vector<std::size_t> target_joints, std::size_t latent_dim,
                            const SolverConfig& config);
  std::size_t input_dim() const { return network.input_dim(); }
};

/// Targets in network units, ordered like solver.target_joints.
Eigen::VectorXf solver_target_features(const SolverModel& solver, const TargetSpec& spec, const NormStats& stats);

LatentPose solver_forward(const SolverModel& solver, const LatentPose& z, const Eigen::VectorXf& targets);

/// MSE over the 3n target coordinates plus k times MSE over the other
/// 63 - 3n coordinates. Columns are poses; batch values are averaged.
/// Writes d loss / d x_hat when `gradient` is non-null.
double solver_loss(const Eigen::MatrixXf& x_hat, const Eigen::MatrixXf& x_prime, std::span<const std::size_t> target_joints,
                   double k, Eigen::MatrixXf* gradient = nullptr);
double solver_loss(const PoseVector& x_hat, const PoseVector& x_prime, std::span<const std::size_t> target_joints,
                   double k);

struct SolverTrainResult {
  SolverModel model;
  std::vector<EpochLoss> history;  // validation_loss is measured on validation pairs
};

/// Same-clip pairs (x, x'): input is E(x) with x' target positions, the output
/// is decoded and scored against x'. Only solver parameters change.
SolverTrainResult train_solver(const PoseDataset& dataset, const PoseAutoencoder& autoencoder, std::string name,
                               std::vector<std::size_t> target_joints, const SolverConfig& config,
                               const EpochCallback& on_epoch = {});

/// Autoencoder plus the solver catalog.
struct ModelSet {
  PoseAutoencoder autoencoder;
  std::vector<SolverModel> solvers;

  /// Solver whose joint set equals `joints` (order-insensitive), or nullptr.
  const SolverModel* find_solver(std::span<const std::size_t> joints) const;
};

/// normalize -> encode -> solve -> decode -> denormalize, optionally followed
/// by bone-length restoration to the input pose's lengths.
PoseVector solve_pose(const PoseVector& pose, const TargetSpec& spec, const ModelSet& models, bool post_process);

/// One encode, one solver pass per spec in order, one decode. Specs must use
/// disjoint joint sets.
PoseVector compose_solvers(const PoseVector& pose, std::span<const TargetSpec> specs, const ModelSet& models,
                           bool post_process);

/// Latent after every solver pass of a composition (for diagnostics).
std::vector<LatentPose> compose_latents(const PoseVector& pose, std::span<const TargetSpec> specs,
                                        const ModelSet& models);

}  // namespace npe
