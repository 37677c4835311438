#include "npe/models.hpp"

#include "npe/config.hpp"
#include "npe/error.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace npe {

namespace fs = std::filesystem;

namespace {

std::string float_list(std::span<const float> values) {
  std::string out;
  char buf[32];
  for (float v : values) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (!out.empty()) out += ' ';
    out.append(buf, ptr);
  }
  return out;
}

std::vector<float> parse_floats(const std::string& text) {
  std::vector<float> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    float v = 0.0f;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
      throw Error(ErrorCode::CorruptHeader, "bad number in descriptor: " + tok);
    }
    out.push_back(v);
  }
  return out;
}

std::string require(const KeyValueFile& meta, const std::string& key, const fs::path& path) {
  auto v = meta.get(key);
  if (!v) throw Error(ErrorCode::CorruptHeader, path.string() + " lacks '" + key + "'");
  return *v;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << v;
  return out.str();
}

}  // namespace

std::vector<std::size_t> parse_joint_list(const std::string& text) {
  std::vector<std::size_t> joints;
  for (const std::string& part : split(text, ',')) {
    if (part.empty()) continue;
    if (auto idx = canonical_topology().index_of(part)) {
      joints.push_back(*idx);
      continue;
    }
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc{} || ptr != part.data() + part.size() || v >= kJointCount) {
      throw Error(ErrorCode::InvalidTargets, "unknown joint '" + part + "'");
    }
    joints.push_back(v);
  }
  return joints;
}

std::string format_joint_list(const std::vector<std::size_t>& joints) {
  std::string out;
  for (std::size_t j : joints) out += (out.empty() ? "" : ",") + canonical_topology().joint_names.at(j);
  return out;
}

const std::vector<SolverPreset>& standard_solver_presets() {
  static const std::vector<SolverPreset> presets = {
      {"hands", {joint::LeftHand, joint::RightHand}},
      {"feet", {joint::LeftFoot, joint::RightFoot}},
      {"head", {joint::Head}},
  };
  return presets;
}

void save_autoencoder(const PoseAutoencoder& ae, const fs::path& dir) {
  fs::create_directories(dir);
  save_weights_file(ae.network(), dir / "ae.npw");
  std::ostringstream meta;
  meta << "kind = autoencoder\n"
       << "latent_dim = " << ae.latent_dim() << "\n"
       << "trained = " << (ae.trained() ? "true" : "false") << "\n"
       << "stats_hash = " << hex64(ae.stats().hash()) << "\n"
       << "mean = " << float_list(ae.stats().mean) << "\n"
       << "std = " << float_list(ae.stats().std) << "\n";
  write_text_file(dir / "ae.meta", meta.str());
}

PoseAutoencoder load_autoencoder(const fs::path& dir) {
  const fs::path meta_path = dir / "ae.meta";
  const KeyValueFile meta = KeyValueFile::load(meta_path);
  if (require(meta, "kind", meta_path) != "autoencoder") throw Error(ErrorCode::CorruptHeader, "not an autoencoder descriptor");
  NormStats stats;
  const auto mean = parse_floats(require(meta, "mean", meta_path));
  const auto sd = parse_floats(require(meta, "std", meta_path));
  if (mean.size() != kPoseDim || sd.size() != kPoseDim) throw Error(ErrorCode::CorruptHeader, "stats must hold 63 values");
  std::copy(mean.begin(), mean.end(), stats.mean.begin());
  std::copy(sd.begin(), sd.end(), stats.std.begin());
  if (require(meta, "stats_hash", meta_path) != hex64(stats.hash())) {
    throw Error(ErrorCode::CorruptHeader, "autoencoder stats do not match their hash");
  }
  return PoseAutoencoder(load_weights_file(dir / "ae.npw"), stats, meta.get("trained") == "true");
}

fs::path solver_weights_path(const fs::path& dir, const std::string& name) { return dir / ("solver_" + name + ".npw"); }

void save_solver(const SolverModel& solver, const fs::path& dir) {
  fs::create_directories(dir);
  save_weights_file(solver.network, solver_weights_path(dir, solver.name));
  std::ostringstream meta;
  meta.precision(17);
  meta << "kind = solver\n"
       << "name = " << solver.name << "\n"
       << "joints = " << format_joint_list(solver.target_joints) << "\n"
       << "k = " << solver.k << "\n"
       << "normalize_targets = " << (solver.normalize_targets ? "true" : "false") << "\n"
       << "stats_hash = " << hex64(solver.stats_hash) << "\n";
  write_text_file(dir / ("solver_" + solver.name + ".meta"), meta.str());
}

SolverModel load_solver(const fs::path& meta_path) {
  const KeyValueFile meta = KeyValueFile::load(meta_path);
  if (require(meta, "kind", meta_path) != "solver") throw Error(ErrorCode::CorruptHeader, "not a solver descriptor");
  SolverModel s;
  s.name = require(meta, "name", meta_path);
  s.target_joints = parse_joint_list(require(meta, "joints", meta_path));
  s.k = meta.get_double("k", 0.01);
  s.normalize_targets = meta.get("normalize_targets") != "false";
  s.stats_hash = std::stoull(require(meta, "stats_hash", meta_path), nullptr, 16);
  s.network = load_weights_file(solver_weights_path(meta_path.parent_path(), s.name));
  if (s.network.input_dim() < 3 * s.target_joints.size() ||
      s.network.input_dim() - 3 * s.target_joints.size() != s.network.output_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "solver '" + s.name + "' network does not match its joint count");
  }
  return s;
}

ModelSet load_model_set(const fs::path& dir) {
  ModelSet set;
  set.autoencoder = load_autoencoder(dir);
  std::vector<fs::path> metas;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string file = entry.path().filename().string();
    if (file.starts_with("solver_") && entry.path().extension() == ".meta") metas.push_back(entry.path());
  }
  std::sort(metas.begin(), metas.end());
  for (const auto& m : metas) {
    SolverModel s = load_solver(m);
    if (s.stats_hash != set.autoencoder.stats().hash()) {
      throw Error(ErrorCode::InvalidArgument, "solver '" + s.name + "' was trained with different normalization stats");
    }
    if (s.network.output_dim() != set.autoencoder.latent_dim()) {
      throw Error(ErrorCode::ShapeMismatch, "solver '" + s.name + "' latent width differs from the autoencoder");
    }
    set.solvers.push_back(std::move(s));
  }
  return set;
}

std::size_t weight_footprint_bytes(const ModelSet& models, const std::vector<std::string>& solver_names) {
  std::size_t total = save_weights(models.autoencoder.network()).size();
  for (const auto& name : solver_names) {
    auto it = std::find_if(models.solvers.begin(), models.solvers.end(),
                           [&](const SolverModel& s) { return s.name == name; });
    if (it == models.solvers.end()) throw Error(ErrorCode::NoSolverForJoints, "no solver named '" + name + "'");
    total += save_weights(it->network).size();
  }
  return total;
}

}  // namespace npe
