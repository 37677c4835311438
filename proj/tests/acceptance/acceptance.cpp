// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "npe/bench.hpp"
#include "npe/config.hpp"
#include "npe/fabrik.hpp"
#include "npe/models.hpp"
#include "npe/service.hpp"
#include "npe/synth.hpp"
#include "npe/ws_server.hpp"

#include "test_support.hpp"

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace {

using namespace npe;
using Clock = std::chrono::steady_clock;
using json = nlohmann::json;
using Md = Eigen::MatrixXd;

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  fmt::print("{} {}: {}\n", pass ? "PASS" : "FAIL", name, detail);
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Md random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Md m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

void randomize_biases(Mlp<double>& net, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    auto& b = net.mutable_layer(i).bias;
    b = random_matrix(b.size(), 1, rng, 0.3);
  }
}

Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized();
}

// ---------------------------------------------------------------------------

void check_gradients() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> dim(2, 12);
  const int instances = 100;
  struct Kind {
    const char* name;
    bool tied;
    Activation act;
  };
  const Kind kinds[] = {{"dense_relu", false, Activation::Relu},
                        {"dense_linear", false, Activation::Linear},
                        {"tied_relu", true, Activation::Relu},
                        {"tied_linear", true, Activation::Linear}};
  std::string detail;
  bool pass = true;
  for (const Kind& k : kinds) {
    double worst = 0.0;
    for (int i = 0; i < instances; ++i) {
      const auto a = static_cast<std::size_t>(dim(rng)), b = static_cast<std::size_t>(dim(rng));
      Mlp<double> net;
      if (k.tied) {
        // The owner is linear so the tied layer alone decides the activation.
        net.add_dense(a, b, Activation::Linear);
        net.add_tied(0, k.act);
      } else {
        net.add_dense(a, b, k.act);
      }
      net.initialize(rng);
      randomize_biases(net, rng);
      const Md x = random_matrix(static_cast<Eigen::Index>(a), 3, rng);
      const Md t = random_matrix(static_cast<Eigen::Index>(net.output_dim()), 3, rng);
      worst = std::max(worst, testing::mlp_gradient_error(net, x, t, rng));
    }
    pass = pass && worst < 1e-4;
    detail += fmt::format("{}={:.2e} ", k.name, worst);
  }

  // Reconstruction loss through whole tied autoencoders: random small ones,
  // plus a few at the production width with sampled coordinates.
  double worst_ae = 0.0;
  for (int i = 0; i < instances; ++i) {
    const auto in = static_cast<std::size_t>(dim(rng)), h = static_cast<std::size_t>(dim(rng)),
               z = static_cast<std::size_t>(dim(rng));
    Mlp<double> net;
    net.add_dense(in, h, Activation::Relu);
    net.add_dense(h, z, Activation::Linear);
    net.add_tied(1, Activation::Relu);
    net.add_tied(0, Activation::Linear);
    net.initialize(rng);
    randomize_biases(net, rng);
    const Md x = random_matrix(static_cast<Eigen::Index>(in), 4, rng);
    worst_ae = std::max(worst_ae, testing::mlp_gradient_error(net, x, x, rng));
  }
  for (int i = 0; i < 3; ++i) {
    Mlp<double> net;
    net.add_dense(63, 200, Activation::Relu);
    net.add_dense(200, 200, Activation::Relu);
    net.add_dense(200, 64, Activation::Linear);
    net.add_tied(2, Activation::Relu);
    net.add_tied(1, Activation::Relu);
    net.add_tied(0, Activation::Linear);
    net.initialize(rng);
    randomize_biases(net, rng);
    const Md x = random_matrix(63, 4, rng);
    worst_ae = std::max(worst_ae, testing::mlp_gradient_error(net, x, x, rng, 60));
  }
  pass = pass && worst_ae < 1e-4;
  detail += fmt::format("reconstruction_loss={:.2e} ", worst_ae);

  // Solver loss on dyadic values so every probe is exact in float.
  std::uniform_int_distribution<int> q(-4096, 4096);
  std::uniform_int_distribution<std::size_t> pick(0, standard_solver_presets().size() - 1);
  double worst_solver = 0.0;
  for (int i = 0; i < instances; ++i) {
    Eigen::MatrixXf x(63, 2), y(63, 2);
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      x.data()[j] = static_cast<float>(q(rng)) / 1024.0f;
      y.data()[j] = static_cast<float>(q(rng)) / 1024.0f;
    }
    const auto& joints = standard_solver_presets()[pick(rng)].joints;
    Eigen::MatrixXf g;
    solver_loss(x, y, joints, 0.01, &g);
    const Eigen::VectorXd fd = testing::central_difference(
        [&](const Eigen::VectorXd& v) {
          const Eigen::MatrixXf m = Eigen::Map<const Eigen::MatrixXd>(v.data(), 63, 2).cast<float>();
          return solver_loss(m, y, joints, 0.01);
        },
        Eigen::Map<const Eigen::VectorXf>(x.data(), x.size()).cast<double>(), 1.0 / 1024.0);
    worst_solver = std::max(
        worst_solver, testing::relative_error(Eigen::Map<const Eigen::VectorXf>(g.data(), g.size()).cast<double>(), fd));
  }
  pass = pass && worst_solver < 1e-4;
  const double elapsed = seconds_since(t0);
  pass = pass && elapsed < 60.0;
  detail += fmt::format("solver_loss={:.2e} ({} instances each, limit 1e-4) time={:.1f}s", worst_solver, instances,
                        elapsed);
  report(pass, "gradient-correctness", detail);
}

// ---------------------------------------------------------------------------

// A target the chain can actually reach: the end effector of another random
// configuration of the same chain.
Eigen::Vector3d reachable_target(const KinematicChain& c, std::mt19937_64& rng) {
  Eigen::Vector3d target = c.joints.front();
  for (double l : c.lengths) target += l * random_unit(rng);
  return target;
}

struct ChainSweep {
  int within = 0;
  double drift = 0.0;
};

template <typename MakeLengths>
ChainSweep chain_sweep(std::mt19937_64& rng, MakeLengths make_lengths, int trials = 1000) {
  const FabrikConfig cfg;
  ChainSweep out;
  for (int t = 0; t < trials; ++t) {
    std::vector<Eigen::Vector3d> p = {Eigen::Vector3d::Zero()};
    for (double l : make_lengths()) p.push_back(p.back() + l * random_unit(rng));
    const KinematicChain c = KinematicChain::from_positions(p);
    const Eigen::Vector3d target = reachable_target(c, rng);
    const ChainSolve s = fabrik_solve_chain(c, target, cfg);
    for (std::size_t i = 0; i < c.lengths.size(); ++i) {
      out.drift = std::max(out.drift, std::abs((s.chain.joints[i + 1] - s.chain.joints[i]).norm() - c.lengths[i]));
    }
    out.within += (s.chain.joints.back() - target).norm() < cfg.tolerance ? 1 : 0;
  }
  return out;
}

void check_fabrik() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> len(0.1, 1.0), reach(0.0, 0.9);
  std::uniform_int_distribution<std::size_t> segs(2, 6);
  const FabrikConfig cfg;

  // Limb chains of the canonical skeleton (effector up to the hips) in random
  // configurations: the chains the full-body solver works on.
  const auto& topo = canonical_topology();
  std::vector<std::vector<double>> limbs;
  for (std::size_t e : {joint::Head, joint::LeftHand, joint::RightHand, joint::LeftFoot, joint::RightFoot}) {
    std::vector<double> l;
    for (auto j = static_cast<int>(e); topo.parent[static_cast<std::size_t>(j)] >= 0;
         j = topo.parent[static_cast<std::size_t>(j)]) {
      l.push_back(topo.reference_bone_lengths[static_cast<std::size_t>(j) - 1]);
    }
    limbs.push_back(l);
  }
  std::uniform_int_distribution<std::size_t> pick(0, limbs.size() - 1);
  const ChainSweep limb = chain_sweep(rng, [&] { return limbs[pick(rng)]; });
  // Arbitrary 2 to 6 segment chains with 0.1 to 1 m segments; reported only.
  const ChainSweep generic = chain_sweep(rng, [&] {
    std::vector<double> l(segs(rng));
    for (double& x : l) x = len(rng);
    return l;
  });
  // The gated count sits close to the 99% line, so a long run is reported too.
  const ChainSweep long_run = chain_sweep(rng, [&] { return limbs[pick(rng)]; }, 100000);
  const double chain_drift = std::max({limb.drift, generic.drift, long_run.drift});
  const int within = limb.within;

  const std::size_t effectors[5] = {joint::Head, joint::LeftHand, joint::RightHand, joint::LeftFoot,
                                    joint::RightFoot};
  double body_drift = 0.0;
  for (int t = 0; t < 500; ++t) {
    const PoseVector p = testing::random_pose(rng);
    std::vector<JointTarget> targets;
    for (std::size_t e : effectors) {
      if (rng() % 2 || targets.empty()) {
        targets.push_back({e, (p.joint(e).cast<double>() + reach(rng) * random_unit(rng)).cast<float>()});
      }
    }
    const PoseVector out = fabrik_solve_fullbody(p, canonical_topology(), targets, cfg);
    const BoneLengths a = bone_lengths(p), b = bone_lengths(out);
    for (std::size_t i = 0; i < kBoneCount; ++i) body_drift = std::max(body_drift, std::abs(a[i] - b[i]));
  }
  const double elapsed = seconds_since(t0);
  const bool pass = chain_drift < 1e-6 && within >= 990 && body_drift < 1e-6 && elapsed < 60.0;
  report(pass, "fabrik-invariants",
         fmt::format("chain drift={:.2e}; limb chains within tolerance {}/1000 (need 990), long-run rate {:.2f}% over 100000 "
                     "limb chains, arbitrary chains {}/1000 (not gated); full-body drift={:.2e} over 500 (limit 1e-6) time={:.1f}s",
                     chain_drift, within, long_run.within / 1000.0, generic.within, body_drift, elapsed));
}

// ---------------------------------------------------------------------------

void check_postprocess() {
  std::mt19937_64 rng(303);
  std::normal_distribution<float> noise(0.0f, 0.05f);
  const auto& ref = canonical_topology().reference_bone_lengths;
  double length_err = 0.0, idem_err = 0.0;
  for (int t = 0; t < 1000; ++t) {
    PoseVector g = testing::random_pose(rng);
    for (float& v : g.values) v += noise(rng);
    const PoseVector once = bone_length_postprocess(g, ref);
    const PoseVector twice = bone_length_postprocess(once, ref);
    const BoneLengths l = bone_lengths(once);
    for (std::size_t b = 0; b < kBoneCount; ++b) length_err = std::max(length_err, std::abs(l[b] - ref[b]));
    for (std::size_t i = 0; i < kPoseDim; ++i) {
      idem_err = std::max(idem_err, static_cast<double>(std::abs(twice.values[i] - once.values[i])));
    }
  }
  report(length_err < 1e-6 && idem_err < 1e-6, "postprocess-contract",
         fmt::format("bone length error={:.2e} idempotence error={:.2e} over 1000 poses (limit 1e-6)", length_err,
                     idem_err));
}

// ---------------------------------------------------------------------------

struct Trained {
  PoseDataset dataset;
  ModelSet models;
};

Trained check_training() {
  const auto t0 = Clock::now();
  const auto dir = testing::fresh_temp_dir("acceptance_corpus");
  SynthCorpusOptions corpus;
  corpus.clips = 80;
  corpus.seed = 1;
  write_synthetic_corpus(dir, corpus);
  DatasetOptions opt;
  opt.seed = 1;
  const IngestResult ingest =
      ingest_bvh_directory(dir, parse_mapping(read_text_file(dir / "cmu_style.map")), opt);

  Trained t;
  t.dataset = ingest.dataset;
  AutoencoderConfig ae_cfg;
  ae_cfg.seed = 1;
  auto ae = train_autoencoder(t.dataset, ae_cfg);
  const double first = ae.history.front().train_loss, last = ae.history.back().train_loss;
  const ReconstructionError train_err = reconstruction_error(ae.model, t.dataset.poses(Split::Train));
  const ReconstructionError val_err = reconstruction_error(ae.model, t.dataset.poses(Split::Validation));
  const double ae_seconds = seconds_since(t0);
  t.models.autoencoder = std::move(ae.model);

  SolverConfig s_cfg;
  for (const auto& preset : standard_solver_presets()) {
    s_cfg.seed = 1 + preset.joints.front();
    t.models.solvers.push_back(train_solver(t.dataset, t.models.autoencoder, preset.name, preset.joints, s_cfg).model);
  }
  const double elapsed = seconds_since(t0);

  const std::size_t poses = t.dataset.pose_count();
  const double ratio = val_err.normalized_mse / train_err.normalized_mse;
  const bool pass = poses >= 10000 && last < 0.2 * first && ratio <= 2.0 && elapsed < 1800.0;
  report(pass, "desk-scale-training",
         fmt::format("{} poses from {} parsed clips ({} dropped as jittery); loss {:.5f} -> {:.5f} (ratio {:.3f}, "
                     "limit 0.2); reconstruction mse train {:.5f} validation {:.5f} (ratio {:.2f}, limit 2); joint "
                     "error train {:.4f} m validation {:.4f} m; autoencoder {:.0f}s, total {:.0f}s",
                     poses, ingest.files.size(), ingest.report.dropped_jittery, first, last, last / first,
                     train_err.normalized_mse, val_err.normalized_mse, ratio, train_err.mean_joint_error_m,
                     val_err.mean_joint_error_m, ae_seconds, elapsed));
  return t;
}

// ---------------------------------------------------------------------------

void check_solver_efficacy(const Trained& t) {
  std::mt19937_64 rng(505);
  const auto& presets = standard_solver_presets();
  int improved = 0;
  const int cases = 500;
  for (int i = 0; i < cases; ++i) {
    const TrainingPair pair = sample_training_pair(t.dataset, rng, Split::Validation);
    const auto& joints = presets[static_cast<std::size_t>(i) % presets.size()].joints;
    TargetSpec spec{joints, {}};
    for (std::size_t j : joints) spec.positions.push_back(pair.x_prime.joint(j));
    const PoseVector out = solve_pose(pair.x, spec, t.models, false);
    double before = 0.0, after = 0.0;
    for (std::size_t k = 0; k < joints.size(); ++k) {
      before += (pair.x.joint(joints[k]) - spec.positions[k]).norm();
      after += (out.joint(joints[k]) - spec.positions[k]).norm();
    }
    improved += after < before ? 1 : 0;
  }
  report(improved >= 450, "solver-efficacy",
         fmt::format("{}/{} held-out cases improved across hands, feet and head solvers (need 90%)", improved, cases));
}

// ---------------------------------------------------------------------------

void check_footprint(const Trained& t) {
  const std::size_t two = weight_footprint_bytes(t.models, {"hands"});
  const std::size_t five = weight_footprint_bytes(t.models, {"hands", "feet", "head"});
  auto params = [&](const std::vector<std::string>& names) {
    std::size_t n = t.models.autoencoder.network().parameter_count();
    for (const auto& s : t.models.solvers) {
      if (std::find(names.begin(), names.end(), s.name) != names.end()) n += s.network.parameter_count();
    }
    return n * 4;
  };
  const std::size_t two_params = params({"hands"}), five_params = params({"hands", "feet", "head"});
  // Layer headers are the only bytes not accounted for by parameters.
  const bool consistent = two - two_params < 200 && five - five_params < 400;
  const double kb2 = two / 1000.0, kb5 = five / 1000.0;
  const bool pass = consistent && std::abs(kb2 - 442.0) <= 0.15 * 442.0 && std::abs(kb5 - 826.0) <= 0.15 * 826.0;
  report(pass, "memory-footprint",
         fmt::format("2-target {:.1f} kB (442 +-15%), 5-target {:.1f} kB (826 +-15%); parameters x 4 bytes = {} and "
                     "{} bytes, serialized {} and {} bytes",
                     kb2, kb5, two_params, five_params, two, five));
}

// ---------------------------------------------------------------------------

void check_runtime(const Trained& t) {
  BenchOptions opt;
  opt.iterations = 1000;
  opt.seed = 7;
  const auto cases = sample_bench_cases(t.dataset, opt.iterations, opt.seed);
  const BenchReport r = run_bench(t.models, cases, opt);
  auto ms = [&](const char* method, std::size_t n, bool post) { return r.find(method, n, post)->mean_ms; };
  const double f2 = ms("FABRIK", 2, false), f5 = ms("FABRIK", 5, false);
  const double o2 = ms("Ours", 2, false), o2p = ms("Ours", 2, true);
  const double o5 = ms("Ours", 5, false), o5p = ms("Ours", 5, true);
  const bool a = o2 < f2, b = o5 < f5, c = o2p > o2 && o5p > o5, d = o5 > o2;
  report(a && b && c && d, "runtime-orderings",
         fmt::format("FABRIK(2) {:.4f} ms, Ours(2) {:.4f} ms, Ours(2)+post {:.4f} ms, FABRIK(5) {:.4f} ms, Ours(5) "
                     "{:.4f} ms, Ours(5)+post {:.4f} ms over {} iterations; Ours(2)<FABRIK(2) {}, Ours(5)<FABRIK(5) "
                     "{}, post slower {}, Ours(5)>Ours(2) {}",
                     f2, o2, o2p, f5, o5, o5p, opt.iterations, a ? "yes" : "no", b ? "yes" : "no",
                     c ? "yes" : "no", d ? "yes" : "no"));
}

void check_input_independence(const Trained& t) {
  const auto cases = sample_bench_cases(t.dataset, 1000, 9);
  const TimingSpread s = neural_runtime_spread(t.models, cases, "hands", 5);
  report(s.std_ms < 0.2 * s.mean_ms, "input-independence",
         fmt::format("neural solve {:.4f} ms mean, {:.4f} ms std ({:.1f}% of mean, limit 20%) over {} targets",
                     s.mean_ms, s.std_ms, 100.0 * s.std_ms / s.mean_ms, s.samples));
}

// ---------------------------------------------------------------------------

void check_service(const Trained& t) {
  PoseService service(t.models);
  WsServer server(service, "127.0.0.1", 0);
  server.start();
  bool pass = true;
  std::string detail;
  try {
    WsClient client("127.0.0.1", server.port());
    int next_id = 1;
    auto call = [&](json msg) {
      msg["correlation_id"] = next_id;
      const json reply = json::parse(client.request(msg.dump()));
      if (reply.value("correlation_id", -1) != next_id++) throw std::runtime_error("correlation_id not echoed");
      if (reply["type"] == "error") throw std::runtime_error("error reply: " + reply.dump());
      return reply;
    };
    const json hello = call({{"type", "hello"}});
    pass = pass && hello["protocol"] == "npe-pose/1" && hello["topology"]["joint_names"].size() == kJointCount;
    const PoseVector start = t.dataset.clips.front().poses.front();
    const json created = call({{"type", "create_session"}, {"pose", pose_to_json(start)}});
    const std::string id = created["session_id"];

    std::mt19937_64 rng(909);
    double worst_residual = 0.0, total_ms = 0.0;
    int solves = 0;
    std::size_t commits = 0;
    for (int i = 0; i < 50; ++i) {
      const TrainingPair pair = sample_training_pair(t.dataset, rng, Split::Validation);
      const json specs = {{{"joints", {"LeftHand", "RightHand"}},
                           {"positions", {{pair.x_prime.joint(joint::LeftHand).x(), pair.x_prime.joint(joint::LeftHand).y(),
                                           pair.x_prime.joint(joint::LeftHand).z()},
                                          {pair.x_prime.joint(joint::RightHand).x(),
                                           pair.x_prime.joint(joint::RightHand).y(),
                                           pair.x_prime.joint(joint::RightHand).z()}}}}};
      const auto s0 = Clock::now();
      const json solved = call({{"type", "solve"}, {"session_id", id}, {"specs", specs}, {"mode", "both"},
                                {"post_process", i % 2 == 1}});
      total_ms += 1000.0 * seconds_since(s0);
      ++solves;
      for (const char* mode : {"neural", "fabrik"}) {
        const json& m = solved["results"][mode];
        const PoseVector pose = pose_from_json(m["pose"]);
        for (const json& r : m["residuals"]) {
          const std::size_t j = r["joint"];
          const Eigen::Vector3f target = j == joint::LeftHand ? pair.x_prime.joint(joint::LeftHand)
                                                              : pair.x_prime.joint(joint::RightHand);
          const double local = (pose.joint(j) - target).cast<double>().norm();
          worst_residual = std::max(worst_residual, std::abs(local - r["distance"].get<double>()));
        }
        pass = pass && m["residuals"].size() == 2;
      }
      if (i % 10 == 0) {
        const json committed = call({{"type", "commit"}, {"session_id", id}, {"pose", solved["results"]["neural"]["pose"]}});
        pass = pass && committed["undo_depth"] == ++commits;
      }
    }
    std::size_t undone = 0;
    json last;
    while (commits > 0) {
      last = call({{"type", "undo"}, {"session_id", id}});
      --commits;
      ++undone;
      pass = pass && last["undo_depth"] == commits;
    }
    pass = pass && pose_from_json(last["pose"]) == pose_from_json(created["pose"]);
    // The stack floor is an error reply rather than a dropped connection.
    json floor = {{"type", "undo"}, {"session_id", id}, {"correlation_id", next_id}};
    const json empty = json::parse(client.request(floor.dump()));
    pass = pass && empty["type"] == "error" && empty["code"] == "undo_empty";
    client.close();
    pass = pass && worst_residual < 1e-4;
    detail = fmt::format("hello/create/{} solves/5 commits/{} undos over WebSocket; worst client-side residual "
                         "mismatch {:.2e} (limit 1e-4); mean round trip {:.2f} ms",
                         solves, undone, worst_residual, total_ms / solves);
  } catch (const std::exception& e) {
    pass = false;
    detail = e.what();
  }
  server.stop();
  report(pass, "service-protocol", detail);
}

}  // namespace

int main() {
  check_gradients();
  check_fabrik();
  check_postprocess();
  const Trained t = check_training();
  check_solver_efficacy(t);
  check_footprint(t);
  check_runtime(t);
  check_input_independence(t);
  check_service(t);
  fmt::print("{} criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
