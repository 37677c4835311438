#include "npe/autoencoder.hpp"
#include "npe/fabrik.hpp"
#include "npe/solver.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace npe;

NormStats unit_stats() {
  NormStats s;
  s.std.fill(1.0f);
  return s;
}

void BM_AutoencoderRoundTrip(benchmark::State& state) {
  const PoseAutoencoder ae(AutoencoderConfig{}, unit_stats());
  const Eigen::VectorXf x = Eigen::VectorXf::Random(kPoseDim);
  for (auto _ : state) {
    Eigen::MatrixXf out = forward(ae.network(), Eigen::MatrixXf(x));
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_AutoencoderRoundTrip);

void BM_SolverNetwork(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::size_t> joints = {joint::LeftHand, joint::RightHand, joint::Head};
  joints.resize(n);
  SolverModel s = SolverModel::create("bench", joints, 64, SolverConfig{});
  const Eigen::MatrixXf in = Eigen::MatrixXf::Random(static_cast<Eigen::Index>(s.input_dim()), 1);
  for (auto _ : state) {
    Eigen::MatrixXf out = forward(s.network, in);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_SolverNetwork)->Arg(1)->Arg(2);

void BM_FabrikFullBody(benchmark::State& state) {
  const PoseVector p = canonical_topology().reference_pose();
  std::vector<JointTarget> targets = {{joint::LeftHand, p.joint(joint::LeftHand) + Eigen::Vector3f(0.1f, 0.2f, 0.1f)},
                                      {joint::RightHand, p.joint(joint::RightHand) + Eigen::Vector3f(-0.1f, 0.3f, 0.0f)}};
  if (state.range(0) == 5) {
    targets.push_back({joint::Head, p.joint(joint::Head) + Eigen::Vector3f(0.05f, -0.05f, 0.05f)});
    targets.push_back({joint::LeftFoot, p.joint(joint::LeftFoot) + Eigen::Vector3f(0.0f, 0.1f, 0.1f)});
    targets.push_back({joint::RightFoot, p.joint(joint::RightFoot) + Eigen::Vector3f(0.0f, 0.0f, -0.1f)});
  }
  for (auto _ : state) {
    PoseVector out = fabrik_solve_fullbody(p, canonical_topology(), targets, FabrikConfig{});
    benchmark::DoNotOptimize(out.values.data());
  }
}
BENCHMARK(BM_FabrikFullBody)->Arg(2)->Arg(5);

void BM_BoneLengthPostprocess(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<float> noise(0.0f, 0.05f);
  PoseVector p = canonical_topology().reference_pose();
  for (float& v : p.values) v += noise(rng);
  for (auto _ : state) {
    PoseVector out = bone_length_postprocess(p, canonical_topology().reference_bone_lengths);
    benchmark::DoNotOptimize(out.values.data());
  }
}
BENCHMARK(BM_BoneLengthPostprocess);

}  // namespace

BENCHMARK_MAIN();
