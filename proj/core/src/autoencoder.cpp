#include "npe/autoencoder.hpp"

#include "npe/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace npe {

void AutoencoderConfig::validate() const {
  if (hidden_width == 0 || hidden_layers == 0 || latent_dim == 0 || epochs == 0 || batch_size == 0 ||
      !(learning_rate > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "autoencoder hyperparameters must be positive");
  }
}

std::string AutoencoderConfig::describe() const {
  std::ostringstream out;
  out << "epochs=" << epochs << " batch_size=" << batch_size << " learning_rate=" << learning_rate
      << " latent_dim=" << latent_dim << " hidden_width=" << hidden_width << " hidden_layers=" << hidden_layers
      << " tied=" << (tied ? "true" : "false") << " seed=" << seed;
  return out.str();
}

PoseAutoencoder::PoseAutoencoder(const AutoencoderConfig& config, const NormStats& stats) : stats_(stats) {
  config.validate();
  std::vector<std::size_t> dims{kPoseDim};
  for (std::size_t i = 0; i < config.hidden_layers; ++i) dims.push_back(config.hidden_width);
  dims.push_back(config.latent_dim);
  const std::size_t enc = dims.size() - 1;
  for (std::size_t i = 0; i < enc; ++i) {
    net_.add_dense(dims[i], dims[i + 1], i + 1 == enc ? Activation::Linear : Activation::Relu);
  }
  for (std::size_t i = 0; i < enc; ++i) {
    const std::size_t mirror = enc - 1 - i;
    const Activation act = i + 1 == enc ? Activation::Linear : Activation::Relu;
    if (config.tied) {
      net_.add_tied(mirror, act);
    } else {
      net_.add_dense(dims[mirror + 1], dims[mirror], act);
    }
  }
  std::mt19937_64 rng(config.seed);
  net_.initialize(rng);
}

PoseAutoencoder::PoseAutoencoder(Mlp<float> network, const NormStats& stats, bool trained)
    : net_(std::move(network)), stats_(stats), trained_(trained) {
  net_.validate();
  const auto n = net_.layers().size();
  if (n < 2 || n % 2 != 0 || net_.input_dim() != kPoseDim || net_.output_dim() != kPoseDim) {
    throw Error(ErrorCode::ShapeMismatch, "network is not a pose autoencoder (63 -> d -> 63, mirrored)");
  }
}

std::size_t PoseAutoencoder::latent_dim() const { return net_.layer(encoder_layers() - 1).out; }

Eigen::MatrixXf PoseAutoencoder::encode_batch(const Eigen::MatrixXf& normalized_poses) const {
  return forward(net_, normalized_poses, nullptr, 0, encoder_layers());
}

Eigen::MatrixXf PoseAutoencoder::decode_batch(const Eigen::MatrixXf& latents) const {
  return forward(net_, latents, nullptr, encoder_layers(), net_.layers().size());
}

LatentPose PoseAutoencoder::encode(const Eigen::VectorXf& normalized_pose) const {
  return encode_batch(normalized_pose);
}

Eigen::VectorXf PoseAutoencoder::decode(const LatentPose& z) const { return decode_batch(z); }

LatentPose PoseAutoencoder::encode_pose(const PoseVector& pose) const {
  return encode(Eigen::VectorXf(normalize(pose, stats_)));
}

PoseVector PoseAutoencoder::decode_pose(const LatentPose& z) const {
  return denormalize(PoseFeatures(decode(z)), stats_);
}

Eigen::MatrixXf normalized_matrix(std::span<const PoseVector> poses, const NormStats& stats) {
  Eigen::MatrixXf out(static_cast<Eigen::Index>(kPoseDim), static_cast<Eigen::Index>(poses.size()));
  for (std::size_t i = 0; i < poses.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = normalize(poses[i], stats);
  return out;
}

namespace {

double chunked_reconstruction_mse(const Mlp<float>& net, const Eigen::MatrixXf& data) {
  constexpr Eigen::Index kChunk = 4096;
  double total = 0.0;
  for (Eigen::Index start = 0; start < data.cols(); start += kChunk) {
    const Eigen::Index n = std::min(kChunk, data.cols() - start);
    const Eigen::MatrixXf block = data.middleCols(start, n);
    total += mse<float>(forward(net, block), block) * static_cast<double>(n);
  }
  return total / static_cast<double>(data.cols());
}

}  // namespace

AutoencoderTrainResult train_autoencoder(const PoseDataset& dataset, const AutoencoderConfig& config,
                                         const EpochCallback& on_epoch) {
  config.validate();
  const auto train_poses = dataset.poses(Split::Train);
  if (train_poses.empty()) throw Error(ErrorCode::EmptyInput, "dataset has no training poses");
  const auto val_poses = dataset.poses(Split::Validation);

  AutoencoderTrainResult result{PoseAutoencoder(config, dataset.stats), {}};
  Mlp<float>& net = result.model.mutable_network();
  const Eigen::MatrixXf train = normalized_matrix(train_poses, dataset.stats);
  const Eigen::MatrixXf val = normalized_matrix(val_poses, dataset.stats);

  auto adam = AdamState<float>::for_model(net, config.learning_rate);
  std::mt19937_64 rng(config.seed ^ 0x5eedULL);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(train.cols()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  ForwardCache<float> cache;
  MlpGradients<float> grads;
  Eigen::MatrixXf batch, grad_out;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, order.size() - start);
      batch.resize(train.rows(), static_cast<Eigen::Index>(n));
      for (std::size_t j = 0; j < n; ++j) batch.col(static_cast<Eigen::Index>(j)) = train.col(order[start + j]);
      const Eigen::MatrixXf out = forward(net, batch, &cache);
      const double loss = mse<float>(out, batch, &grad_out);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::NanLoss, "autoencoder loss became non-finite at epoch " + std::to_string(epoch + 1) +
                                            ", sample offset " + std::to_string(start));
      }
      backward(net, cache, grad_out, &grads);
      adam_step(net, grads, adam);
      loss_sum += loss * static_cast<double>(n);
    }
    EpochLoss entry;
    entry.epoch = epoch + 1;
    entry.train_loss = loss_sum / static_cast<double>(order.size());
    entry.validation_loss =
        val.cols() > 0 ? chunked_reconstruction_mse(net, val) : std::numeric_limits<double>::quiet_NaN();
    result.history.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  result.model.mark_trained();
  return result;
}

ReconstructionError reconstruction_error(const PoseAutoencoder& model, std::span<const PoseVector> poses) {
  if (poses.empty()) throw Error(ErrorCode::EmptyInput, "no poses to evaluate");
  const Eigen::MatrixXf x = normalized_matrix(poses, model.stats());
  ReconstructionError err;
  err.normalized_mse = chunked_reconstruction_mse(model.network(), x);
  double joint_sum = 0.0;
  constexpr Eigen::Index kChunk = 4096;
  for (Eigen::Index start = 0; start < x.cols(); start += kChunk) {
    const Eigen::Index n = std::min(kChunk, x.cols() - start);
    const Eigen::MatrixXf rec = forward(model.network(), Eigen::MatrixXf(x.middleCols(start, n)));
    for (Eigen::Index c = 0; c < n; ++c) {
      const PoseVector out = denormalize(PoseFeatures(rec.col(c)), model.stats());
      const PoseVector& in = poses[static_cast<std::size_t>(start + c)];
      for (std::size_t j = 0; j < kJointCount; ++j) {
        joint_sum += (out.joint(j) - in.joint(j)).cast<double>().norm();
      }
    }
  }
  err.mean_joint_error_m = joint_sum / static_cast<double>(poses.size() * kJointCount);
  return err;
}

std::string format_loss_log(const std::vector<EpochLoss>& history) {
  std::ostringstream out;
  out << "# epoch\ttrain_loss\tvalidation_loss\n";
  out.precision(9);
  for (const auto& e : history) {
    out << e.epoch << '\t' << e.train_loss << '\t';
    if (std::isnan(e.validation_loss)) {
      out << "n/a";
    } else {
      out << e.validation_loss;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace npe
