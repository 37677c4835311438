#pragma once

#include "npe/dataset.hpp"
#include "npe/nn.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace npe {

struct AutoencoderConfig {
  std::size_t hidden_width = 200;
  std::size_t hidden_layers = 2;
  std::size_t latent_dim = 64;
  std::size_t epochs = 20;
  std::size_t batch_size = 256;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  // Decoder reuses transposed encoder matrices; false gives an untied ablation.
  bool tied = true;

  void validate() const;
  std::string describe() const;
};

using LatentPose = Eigen::VectorXf;

/// Encoder layers [0, E) followed by their mirror image [E, 2E). With tying,
/// decoder layer E+i applies the transpose of encoder layer E-1-i.
class PoseAutoencoder {
 public:
  PoseAutoencoder() = default;
  PoseAutoencoder(const AutoencoderConfig& config, const NormStats& stats);
  PoseAutoencoder(Mlp<float> network, const NormStats& stats, bool trained);

  const Mlp<float>& network() const { return net_; }
  Mlp<float>& mutable_network() { return net_; }
  const NormStats& stats() const { return stats_; }
  bool trained() const { return trained_; }
  void mark_trained() { trained_ = true; }

  std::size_t encoder_layers() const { return net_.layers().size() / 2; }
  std::size_t latent_dim() const;

  LatentPose encode(const Eigen::VectorXf& normalized_pose) const;
  Eigen::VectorXf decode(const LatentPose& z) const;
  Eigen::MatrixXf encode_batch(const Eigen::MatrixXf& normalized_poses) const;
  Eigen::MatrixXf decode_batch(const Eigen::MatrixXf& latents) const;

  /// normalize -> encode and decode -> denormalize conveniences.
  LatentPose encode_pose(const PoseVector& pose) const;
  PoseVector decode_pose(const LatentPose& z) const;

 private:
  Mlp<float> net_;
  NormStats stats_;
  bool trained_ = false;
};

struct EpochLoss {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

struct AutoencoderTrainResult {
  PoseAutoencoder model;
  std::vector<EpochLoss> history;
};

using EpochCallback = std::function<void(const EpochLoss&)>;

/// Mini-batch Adam on the reconstruction MSE over shuffled normalized training
/// poses. Throws EmptyInput on an empty training split and NanLoss on divergence.
AutoencoderTrainResult train_autoencoder(const PoseDataset& dataset, const AutoencoderConfig& config,
                                         const EpochCallback& on_epoch = {});

struct ReconstructionError {
  double normalized_mse = 0.0;
  double mean_joint_error_m = 0.0;
};

ReconstructionError reconstruction_error(const PoseAutoencoder& model, std::span<const PoseVector> poses);

/// Columns are normalized poses.
Eigen::MatrixXf normalized_matrix(std::span<const PoseVector> poses, const NormStats& stats);

std::string format_loss_log(const std::vector<EpochLoss>& history);

}  // namespace npe
