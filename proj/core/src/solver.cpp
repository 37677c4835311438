#include "npe/solver.hpp"

#include "npe/error.hpp"
#include "npe/fabrik.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace npe {

void TargetSpec::validate() const {
  if (joints.size() != positions.size()) throw Error(ErrorCode::InvalidTargets, "one position per target joint");
  std::set<std::size_t> seen;
  for (std::size_t j : joints) {
    if (j >= kJointCount) throw Error(ErrorCode::InvalidTargets, "joint index " + std::to_string(j) + " out of range");
    if (!seen.insert(j).second) throw Error(ErrorCode::InvalidTargets, "duplicate target joint " + std::to_string(j));
  }
  for (const auto& p : positions) {
    if (!p.allFinite()) throw Error(ErrorCode::InvalidTargets, "non-finite target position");
  }
}

void SolverConfig::validate() const {
  if (hidden_width == 0 || hidden_layers == 0 || epochs == 0 || batch_size == 0 || !(learning_rate > 0.0) ||
      !(k >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid solver hyperparameters");
  }
}

std::string SolverConfig::describe() const {
  std::ostringstream out;
  out << "epochs=" << epochs << " batch_size=" << batch_size << " learning_rate=" << learning_rate << " k=" << k
      << " hidden_width=" << hidden_width << " hidden_layers=" << hidden_layers
      << " normalize_targets=" << (normalize_targets ? "true" : "false") << " seed=" << seed;
  return out.str();
}

SolverModel SolverModel::create(std::string name, std::vector<std::size_t> target_joints, std::size_t latent_dim,
                                const SolverConfig& config) {
  config.validate();
  TargetSpec probe{target_joints, std::vector<Eigen::Vector3f>(target_joints.size(), Eigen::Vector3f::Zero())};
  probe.validate();
  if (target_joints.empty() || target_joints.size() >= kJointCount) {
    throw Error(ErrorCode::InvalidTargets, "a solver needs a non-empty proper subset of joints");
  }
  SolverModel s;
  s.name = std::move(name);
  s.target_joints = std::move(target_joints);
  s.k = config.k;
  s.normalize_targets = config.normalize_targets;
  std::size_t in = latent_dim + 3 * s.target_joints.size();
  for (std::size_t i = 0; i < config.hidden_layers; ++i) {
    s.network.add_dense(in, config.hidden_width, Activation::Relu);
    in = config.hidden_width;
  }
  s.network.add_dense(in, latent_dim, Activation::Linear);
  std::mt19937_64 rng(config.seed);
  s.network.initialize(rng);
  return s;
}

namespace {

// Position of each solver joint inside spec.joints.
std::vector<std::size_t> match_spec(const SolverModel& solver, const TargetSpec& spec) {
  if (spec.joints.size() != solver.target_joints.size()) {
    throw Error(ErrorCode::NoSolverForJoints, "target count does not match solver '" + solver.name + "'");
  }
  std::vector<std::size_t> order;
  for (std::size_t j : solver.target_joints) {
    const auto it = std::find(spec.joints.begin(), spec.joints.end(), j);
    if (it == spec.joints.end()) {
      throw Error(ErrorCode::NoSolverForJoints, "solver '" + solver.name + "' is not trained for these joints");
    }
    order.push_back(static_cast<std::size_t>(it - spec.joints.begin()));
  }
  return order;
}

Eigen::MatrixXf stack(const Eigen::MatrixXf& top, const Eigen::MatrixXf& bottom) {
  Eigen::MatrixXf out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

}  // namespace

Eigen::VectorXf solver_target_features(const SolverModel& solver, const TargetSpec& spec, const NormStats& stats) {
  spec.validate();
  const auto order = match_spec(solver, spec);
  std::vector<Eigen::Vector3f> positions;
  for (std::size_t i : order) positions.push_back(spec.positions[i]);
  if (solver.normalize_targets) return normalize_targets(solver.target_joints, positions, stats);
  Eigen::VectorXf raw(static_cast<Eigen::Index>(3 * positions.size()));
  for (std::size_t t = 0; t < positions.size(); ++t) raw.segment<3>(static_cast<Eigen::Index>(3 * t)) = positions[t];
  return raw;
}

LatentPose solver_forward(const SolverModel& solver, const LatentPose& z, const Eigen::VectorXf& targets) {
  if (static_cast<std::size_t>(targets.size()) != 3 * solver.target_joints.size()) {
    throw Error(ErrorCode::DimensionMismatch, "solver '" + solver.name + "' expects " +
                                                  std::to_string(3 * solver.target_joints.size()) +
                                                  " target values");
  }
  if (static_cast<std::size_t>(z.size() + targets.size()) != solver.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "latent width does not match solver input");
  }
  Eigen::VectorXf input(z.size() + targets.size());
  input << z, targets;
  return forward(solver.network, Eigen::MatrixXf(input));
}

double solver_loss(const Eigen::MatrixXf& x_hat, const Eigen::MatrixXf& x_prime, std::span<const std::size_t> target_joints,
                   double k, Eigen::MatrixXf* gradient) {
  if (x_hat.rows() != static_cast<Eigen::Index>(kPoseDim) || x_hat.rows() != x_prime.rows() ||
      x_hat.cols() != x_prime.cols() || x_hat.cols() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "solver loss operands must be matching 63-row batches");
  }
  std::array<bool, kPoseDim> is_target{};
  for (std::size_t j : target_joints) {
    if (j >= kJointCount) throw Error(ErrorCode::InvalidTargets, "target joint out of range");
    for (std::size_t a = 0; a < 3; ++a) is_target[3 * j + a] = true;
  }
  const auto n_target = static_cast<std::size_t>(std::count(is_target.begin(), is_target.end(), true));
  if (n_target == 0 || n_target == kPoseDim) {
    throw Error(ErrorCode::InvalidTargets, "target set must be non-empty and leave at least one joint");
  }
  const std::size_t n_rest = kPoseDim - n_target;
  const double batch = static_cast<double>(x_hat.cols());
  const double w_target = 1.0 / (static_cast<double>(n_target) * batch);
  const double w_rest = k / (static_cast<double>(n_rest) * batch);

  if (gradient) gradient->resize(x_hat.rows(), x_hat.cols());
  double loss = 0.0;
  for (Eigen::Index c = 0; c < x_hat.cols(); ++c) {
    for (Eigen::Index r = 0; r < x_hat.rows(); ++r) {
      const double diff = static_cast<double>(x_hat(r, c)) - static_cast<double>(x_prime(r, c));
      const double w = is_target[static_cast<std::size_t>(r)] ? w_target : w_rest;
      loss += w * diff * diff;
      if (gradient) (*gradient)(r, c) = static_cast<float>(2.0 * w * diff);
    }
  }
  return loss;
}

double solver_loss(const PoseVector& x_hat, const PoseVector& x_prime, std::span<const std::size_t> target_joints,
                   double k) {
  return solver_loss(Eigen::MatrixXf(x_hat.as_eigen()), Eigen::MatrixXf(x_prime.as_eigen()), target_joints, k);
}

namespace {

struct PairBatch {
  Eigen::MatrixXf x;        // normalized inputs
  Eigen::MatrixXf x_prime;  // normalized targets poses
  Eigen::MatrixXf targets;  // solver target features
};

PairBatch sample_batch(const PoseDataset& dataset, const SolverModel& solver, std::size_t size, std::mt19937_64& rng,
                       Split which) {
  PairBatch b;
  const auto n = static_cast<Eigen::Index>(size);
  b.x.resize(static_cast<Eigen::Index>(kPoseDim), n);
  b.x_prime.resize(static_cast<Eigen::Index>(kPoseDim), n);
  b.targets.resize(static_cast<Eigen::Index>(3 * solver.target_joints.size()), n);
  TargetSpec spec{solver.target_joints, std::vector<Eigen::Vector3f>(solver.target_joints.size())};
  for (Eigen::Index i = 0; i < n; ++i) {
    const TrainingPair pair = sample_training_pair(dataset, rng, which);
    b.x.col(i) = normalize(pair.x, dataset.stats);
    b.x_prime.col(i) = normalize(pair.x_prime, dataset.stats);
    for (std::size_t t = 0; t < solver.target_joints.size(); ++t) spec.positions[t] = pair.x_prime.joint(solver.target_joints[t]);
    b.targets.col(i) = solver_target_features(solver, spec, dataset.stats);
  }
  return b;
}

}  // namespace

SolverTrainResult train_solver(const PoseDataset& dataset, const PoseAutoencoder& autoencoder, std::string name,
                               std::vector<std::size_t> target_joints, const SolverConfig& config,
                               const EpochCallback& on_epoch) {
  config.validate();
  if (!autoencoder.trained()) throw Error(ErrorCode::UntrainedModel, "solver training needs a trained autoencoder");
  const std::size_t train_poses = dataset.poses(Split::Train).size();
  if (train_poses < 2) throw Error(ErrorCode::EmptyInput, "dataset has no training pairs");

  SolverTrainResult result{
      SolverModel::create(std::move(name), std::move(target_joints), autoencoder.latent_dim(), config), {}};
  SolverModel& solver = result.model;
  solver.stats_hash = autoencoder.stats().hash();
  const Mlp<float>& ae = autoencoder.network();
  const std::size_t enc = autoencoder.encoder_layers();

  std::mt19937_64 rng(config.seed ^ 0xa11ceULL);
  const bool has_validation = !dataset.clip_indices(Split::Validation).empty();
  std::mt19937_64 val_rng(config.seed ^ 0x7a1ULL);
  PairBatch val;
  if (has_validation) val = sample_batch(dataset, solver, 2048, val_rng, Split::Validation);
  const Eigen::MatrixXf val_latent = has_validation ? autoencoder.encode_batch(val.x) : Eigen::MatrixXf();

  auto adam = AdamState<float>::for_model(solver.network, config.learning_rate);
  const std::size_t steps = (train_poses + config.batch_size - 1) / config.batch_size;
  ForwardCache<float> solver_cache, decoder_cache;
  MlpGradients<float> grads;
  Eigen::MatrixXf grad_pose;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (std::size_t step = 0; step < steps; ++step) {
      const PairBatch b = sample_batch(dataset, solver, config.batch_size, rng, Split::Train);
      const Eigen::MatrixXf z = forward(ae, b.x, nullptr, 0, enc);
      const Eigen::MatrixXf z_hat = forward(solver.network, stack(z, b.targets), &solver_cache);
      const Eigen::MatrixXf x_hat = forward(ae, z_hat, &decoder_cache, enc, ae.layers().size());
      const double loss = solver_loss(x_hat, b.x_prime, solver.target_joints, solver.k, &grad_pose);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::NanLoss, "solver loss became non-finite at epoch " + std::to_string(epoch + 1));
      }
      const Eigen::MatrixXf grad_latent = backward(ae, decoder_cache, grad_pose, nullptr);
      backward(solver.network, solver_cache, grad_latent, &grads);
      adam_step(solver.network, grads, adam);
      loss_sum += loss;
    }
    EpochLoss entry;
    entry.epoch = epoch + 1;
    entry.train_loss = loss_sum / static_cast<double>(steps);
    if (has_validation) {
      const Eigen::MatrixXf z_hat = forward(solver.network, stack(val_latent, val.targets));
      entry.validation_loss = solver_loss(autoencoder.decode_batch(z_hat), val.x_prime, solver.target_joints, solver.k);
    } else {
      entry.validation_loss = std::numeric_limits<double>::quiet_NaN();
    }
    result.history.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  return result;
}

const SolverModel* ModelSet::find_solver(std::span<const std::size_t> joints) const {
  std::vector<std::size_t> want(joints.begin(), joints.end());
  std::sort(want.begin(), want.end());
  for (const auto& s : solvers) {
    std::vector<std::size_t> have = s.target_joints;
    std::sort(have.begin(), have.end());
    if (have == want) return &s;
  }
  return nullptr;
}

namespace {

const SolverModel& require_solver(const ModelSet& models, const TargetSpec& spec) {
  spec.validate();
  const SolverModel* s = models.find_solver(spec.joints);
  if (!s) {
    std::string names;
    for (std::size_t j : spec.joints) names += (names.empty() ? "" : ",") + canonical_topology().joint_names.at(j);
    throw Error(ErrorCode::NoSolverForJoints, "no solver trained for {" + names + "}");
  }
  return *s;
}

PoseVector finish(const PoseVector& input, const LatentPose& z, const ModelSet& models, bool post_process) {
  PoseVector out = models.autoencoder.decode_pose(z);
  if (post_process) out = bone_length_postprocess(out, bone_lengths(input));
  return out;
}

}  // namespace

PoseVector solve_pose(const PoseVector& pose, const TargetSpec& spec, const ModelSet& models, bool post_process) {
  const SolverModel& solver = require_solver(models, spec);
  const LatentPose z = models.autoencoder.encode_pose(pose);
  const LatentPose z_hat = solver_forward(solver, z, solver_target_features(solver, spec, models.autoencoder.stats()));
  return finish(pose, z_hat, models, post_process);
}

std::vector<LatentPose> compose_latents(const PoseVector& pose, std::span<const TargetSpec> specs,
                                        const ModelSet& models) {
  std::set<std::size_t> used;
  std::vector<const SolverModel*> chain;
  for (const auto& spec : specs) {
    chain.push_back(&require_solver(models, spec));
    for (std::size_t j : spec.joints) {
      if (!used.insert(j).second) {
        throw Error(ErrorCode::OverlappingTargets, "joint " + std::to_string(j) + " appears in two target sets");
      }
    }
  }
  std::vector<LatentPose> latents;
  latents.push_back(models.autoencoder.encode_pose(pose));
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto features = solver_target_features(*chain[i], specs[i], models.autoencoder.stats());
    latents.push_back(solver_forward(*chain[i], latents.back(), features));
  }
  return latents;
}

PoseVector compose_solvers(const PoseVector& pose, std::span<const TargetSpec> specs, const ModelSet& models,
                           bool post_process) {
  const auto latents = compose_latents(pose, specs, models);
  return finish(pose, latents.back(), models, post_process);
}

}  // namespace npe
