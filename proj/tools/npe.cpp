// npe: command-line front end for ingest, training, solving, benchmarking and serving.

#include "npe/bench.hpp"
#include "npe/config.hpp"
#include "npe/error.hpp"
#include "npe/models.hpp"
#include "npe/service.hpp"
#include "npe/synth.hpp"
#include "npe/ws_server.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Values from --config fill every option the command line left unset.
void apply_config(CLI::App& sub, const std::string& path) {
  const npe::KeyValueFile file = npe::KeyValueFile::load(path);
  for (const auto& kv : file.entries()) {
    std::string name = kv.key;
    for (char& c : name) {
      if (c == '_') c = '-';
    }
    CLI::Option* opt = sub.get_option_no_throw("--" + name);
    if (opt == nullptr) {
      throw npe::Error(npe::ErrorCode::InvalidArgument,
                       path + ":" + std::to_string(kv.line) + ": unknown key '" + kv.key + "' for " + sub.get_name());
    }
    if (opt->count() > 0) continue;
    if (opt->get_type_size() == 0) {
      // Flags accept true/false spellings.
      if (kv.value == "true" || kv.value == "1") opt->add_result("true");
      else if (kv.value == "false" || kv.value == "0") opt->add_result("false");
      else throw npe::Error(npe::ErrorCode::InvalidArgument, "flag '" + kv.key + "' expects true or false");
    } else {
      opt->add_result(kv.value);
    }
    opt->run_callback();
  }
}

struct Common {
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
};

void add_common(CLI::App* sub, Common& c, const std::string& out_help) {
  sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  sub->add_option("--config", c.config, "key = value file supplying defaults for this command");
  sub->add_option("--out", c.out, out_help);
}

int cmd_synth(const Common& common, std::size_t clips, std::size_t min_frames, std::size_t max_frames,
              double jitter_fraction, double fps) {
  npe::SynthCorpusOptions o;
  o.clips = clips;
  o.min_frames = min_frames;
  o.max_frames = max_frames;
  o.jitter_fraction = jitter_fraction;
  o.frame_time = 1.0 / fps;
  o.seed = common.seed;
  const auto files = npe::write_synthetic_corpus(common.out, o);
  std::size_t frames = 0;
  for (const auto& f : files) frames += f.options.frames;
  std::cout << "wrote " << files.size() << " clips (" << frames << " frames) and cmu_style.map to " << common.out
            << "\n";
  return 0;
}

int cmd_ingest(const Common& common, const std::string& input, const std::string& mapping_path,
               double validation_fraction, double jitter, bool remove_heading) {
  const npe::RetargetMapping mapping = npe::parse_mapping(npe::read_text_file(mapping_path));
  npe::DatasetOptions options;
  options.validation_fraction = validation_fraction;
  options.jitter_threshold = jitter;
  options.seed = common.seed;
  npe::RetargetOptions ro;
  ro.remove_heading = remove_heading;
  const npe::IngestResult r = npe::ingest_bvh_directory(input, mapping, options, ro);
  for (const auto& f : r.failures) std::cerr << "skipped " << f.file << ": " << f.message << "\n";
  npe::save_dataset(r.dataset, common.out);
  std::cout << "poses " << r.dataset.pose_count() << "\n"
            << "clips " << r.dataset.clips.size() << " (" << r.dataset.clip_indices(npe::Split::Validation).size()
            << " validation)\n"
            << "dropped_jittery " << r.report.dropped_jittery << "\n"
            << "failed_files " << r.failures.size() << "\n"
            << "wrote " << common.out << "\n";
  return 0;
}

void print_epoch(const npe::EpochLoss& e) {
  std::printf("epoch %zu  train %.6f  validation %.6f\n", e.epoch, e.train_loss, e.validation_loss);
  std::fflush(stdout);
}

int cmd_train_ae(const Common& common, const std::string& dataset_path, npe::AutoencoderConfig cfg) {
  cfg.seed = common.seed;
  cfg.validate();
  std::cout << "config: " << cfg.describe() << "\n";
  const npe::PoseDataset ds = npe::load_dataset(dataset_path);
  auto result = npe::train_autoencoder(ds, cfg, print_epoch);
  npe::save_autoencoder(result.model, common.out);
  npe::write_text_file(fs::path(common.out) / "ae_loss.tsv", npe::format_loss_log(result.history));
  const auto val = ds.poses(npe::Split::Validation);
  if (!val.empty()) {
    const auto err = npe::reconstruction_error(result.model, val);
    std::printf("validation reconstruction: mse %.6f, mean joint error %.4f m\n", err.normalized_mse,
                err.mean_joint_error_m);
  }
  std::cout << "wrote " << common.out << "\n";
  return 0;
}

int cmd_train_solver(const Common& common, const std::string& dataset_path, const std::string& models_dir,
                     const std::string& name, const std::string& joints, npe::SolverConfig cfg) {
  cfg.seed = common.seed;
  cfg.validate();
  std::cout << "config: " << cfg.describe() << "\n";
  const std::vector<std::size_t> target = npe::parse_joint_list(joints);
  std::cout << "solver " << name << " targets " << npe::format_joint_list(target) << "\n";
  const npe::PoseDataset ds = npe::load_dataset(dataset_path);
  const npe::PoseAutoencoder ae = npe::load_autoencoder(models_dir);
  if (ae.stats() != ds.stats) {
    throw npe::Error(npe::ErrorCode::InvalidArgument, "dataset stats differ from the autoencoder's");
  }
  auto result = npe::train_solver(ds, ae, name, target, cfg, print_epoch);
  const std::string out = common.out.empty() ? models_dir : common.out;
  npe::save_solver(result.model, out);
  npe::write_text_file(fs::path(out) / ("solver_" + name + "_loss.tsv"), npe::format_loss_log(result.history));
  std::cout << "wrote " << npe::solver_weights_path(out, name).string() << "\n";
  return 0;
}

int cmd_solve(const Common& common, const std::string& models_dir, const std::string& input) {
  npe::PoseService service(npe::load_model_set(models_dir));
  json request = json::parse(npe::read_text_file(input));
  std::optional<npe::PoseVector> pose;
  if (request.contains("pose")) pose = npe::pose_from_json(request["pose"]);
  request["type"] = "solve";
  request["session_id"] = service.create_session(pose);
  const json reply = service.handle(request);
  const std::string text = reply.dump(2) + "\n";
  if (common.out.empty()) std::cout << text;
  else npe::write_text_file(common.out, text);
  return reply["type"] == "error" ? 1 : 0;
}

int cmd_bench(const Common& common, const std::string& models_dir, const std::string& dataset_path,
              npe::BenchOptions options) {
  options.seed = common.seed;
  const npe::ModelSet models = npe::load_model_set(models_dir);
  const npe::PoseDataset ds = npe::load_dataset(dataset_path);
  const auto cases = npe::sample_bench_cases(ds, options.iterations, options.seed);
  const npe::BenchReport report = npe::run_bench(models, cases, options);
  std::cout << report.to_table();
  if (!common.out.empty()) {
    npe::write_text_file(common.out, report.to_tsv());
    std::cout << "wrote " << common.out << "\n";
  }
  return 0;
}

int cmd_serve(const std::string& models_dir, const std::string& bind, std::uint16_t port) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  npe::PoseService service(npe::load_model_set(models_dir));
  npe::WsServer server(service, bind, port);
  server.start();
  std::cout << "listening on ws://" << bind << ":" << server.port() << "/" << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  std::cout << "stopped\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural pose editing toolkit"};
  app.require_subcommand(1);

  Common c;

  auto* synth = app.add_subcommand("synth", "Write a procedural CMU-style BVH corpus and its mapping file");
  add_common(synth, c, "Output directory");
  std::size_t clips = 8, min_frames = 400, max_frames = 900;
  double jitter_fraction = 0.1, fps = 60.0;
  synth->add_option("--clips", clips)->capture_default_str();
  synth->add_option("--min-frames", min_frames)->capture_default_str();
  synth->add_option("--max-frames", max_frames)->capture_default_str();
  synth->add_option("--jitter-fraction", jitter_fraction, "Share of clips with injected glitches")->capture_default_str();
  synth->add_option("--fps", fps)->capture_default_str();

  auto* ingest = app.add_subcommand("ingest", "Parse and retarget BVH clips into a dataset file");
  add_common(ingest, c, "Dataset file to write");
  std::string input, mapping;
  double validation_fraction = 0.05, jitter = 0.3;
  bool remove_heading = false;
  ingest->add_option("--input", input, "Directory of .bvh files");
  ingest->add_option("--mapping", mapping, "Mapping file");
  ingest->add_option("--validation-fraction", validation_fraction)->capture_default_str();
  ingest->add_option("--jitter-threshold", jitter, "Max per-frame joint displacement (m)")->capture_default_str();
  ingest->add_flag("--remove-heading", remove_heading, "Rotate every pose to face +Z");

  npe::AutoencoderConfig ae_cfg;
  std::string dataset_path, models_dir;
  bool untied = false;
  auto* train_ae = app.add_subcommand("train-ae", "Train the pose autoencoder");
  add_common(train_ae, c, "Model directory to write");
  train_ae->add_option("--dataset", dataset_path);
  train_ae->add_option("--epochs", ae_cfg.epochs)->capture_default_str();
  train_ae->add_option("--batch-size", ae_cfg.batch_size)->capture_default_str();
  train_ae->add_option("--learning-rate", ae_cfg.learning_rate)->capture_default_str();
  train_ae->add_option("--latent-dim", ae_cfg.latent_dim)->capture_default_str();
  train_ae->add_option("--hidden-width", ae_cfg.hidden_width)->capture_default_str();
  train_ae->add_option("--hidden-layers", ae_cfg.hidden_layers)->capture_default_str();
  train_ae->add_flag("--untied", untied, "Give the decoder its own matrices");

  npe::SolverConfig s_cfg;
  std::string solver_name, joints;
  bool raw_targets = false;
  auto* train_solver = app.add_subcommand("train-solver", "Train a solver for one target joint set");
  add_common(train_solver, c, "Model directory to write (defaults to --models)");
  train_solver->add_option("--dataset", dataset_path);
  train_solver->add_option("--models", models_dir, "Directory holding the trained autoencoder");
  train_solver->add_option("--name", solver_name, "Solver name, e.g. hands");
  train_solver->add_option("--joints", joints, "Target joints, e.g. LeftHand,RightHand");
  train_solver->add_option("--epochs", s_cfg.epochs)->capture_default_str();
  train_solver->add_option("--batch-size", s_cfg.batch_size)->capture_default_str();
  train_solver->add_option("--learning-rate", s_cfg.learning_rate)->capture_default_str();
  train_solver->add_option("--k", s_cfg.k, "Weight of the non-target term")->capture_default_str();
  train_solver->add_option("--hidden-width", s_cfg.hidden_width)->capture_default_str();
  train_solver->add_option("--hidden-layers", s_cfg.hidden_layers)->capture_default_str();
  train_solver->add_flag("--raw-targets", raw_targets, "Feed target positions without normalization");

  auto* solve = app.add_subcommand("solve", "Solve one request file and write the result");
  add_common(solve, c, "Result file (stdout when omitted)");
  std::string request_path;
  solve->add_option("--models", models_dir);
  solve->add_option("--in", request_path, "JSON request: pose, specs, mode, post_process");

  npe::BenchOptions bench_opt;
  auto* bench = app.add_subcommand("bench", "Time FABRIK against the neural solvers");
  add_common(bench, c, "Tab-separated report file");
  bench->add_option("--models", models_dir);
  bench->add_option("--dataset", dataset_path);
  bench->add_option("--iterations", bench_opt.iterations)->capture_default_str();
  bench->add_option("--repeats", bench_opt.repeats, "Timed runs per case; the fastest counts")->capture_default_str();
  bench->add_option("--fabrik-tolerance", bench_opt.fabrik.tolerance)->capture_default_str();
  bench->add_option("--fabrik-max-iterations", bench_opt.fabrik.max_iterations)->capture_default_str();
  bench->add_option("--two-target-solver", bench_opt.two_target_solver)->capture_default_str();

  auto* serve = app.add_subcommand("serve", "Run the WebSocket pose service");
  add_common(serve, c, "Unused");
  std::string bind = "127.0.0.1";
  std::uint16_t port = 8765;
  serve->add_option("--models", models_dir);
  serve->add_option("--bind", bind)->capture_default_str();
  serve->add_option("--port", port, "0 picks a free port")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!c.config.empty()) apply_config(*sub, c.config);
    auto need = [&](const std::string& value, const char* flag) {
      if (value.empty()) throw npe::Error(npe::ErrorCode::InvalidArgument, std::string(flag) + " is required");
    };

    if (sub == synth) {
      need(c.out, "--out");
      return cmd_synth(c, clips, min_frames, max_frames, jitter_fraction, fps);
    }
    if (sub == ingest) {
      need(input, "--input");
      need(mapping, "--mapping");
      need(c.out, "--out");
      return cmd_ingest(c, input, mapping, validation_fraction, jitter, remove_heading);
    }
    if (sub == train_ae) {
      need(dataset_path, "--dataset");
      need(c.out, "--out");
      ae_cfg.tied = !untied;
      return cmd_train_ae(c, dataset_path, ae_cfg);
    }
    if (sub == train_solver) {
      need(dataset_path, "--dataset");
      need(models_dir, "--models");
      need(solver_name, "--name");
      need(joints, "--joints");
      s_cfg.normalize_targets = !raw_targets;
      return cmd_train_solver(c, dataset_path, models_dir, solver_name, joints, s_cfg);
    }
    if (sub == solve) {
      need(models_dir, "--models");
      need(request_path, "--in");
      return cmd_solve(c, models_dir, request_path);
    }
    if (sub == bench) {
      need(models_dir, "--models");
      need(dataset_path, "--dataset");
      return cmd_bench(c, models_dir, dataset_path, bench_opt);
    }
    if (sub == serve) {
      need(models_dir, "--models");
      return cmd_serve(models_dir, bind, port);
    }
  } catch (const npe::Error& e) {
    std::cerr << "error [" << npe::to_string(e.code()) << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
