#include "npe/config.hpp"
#include "npe/dataset.hpp"
#include "npe/synth.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>

namespace npe {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int status = -1;
  std::string output;  // stdout and stderr interleaved
};

CliRun npe_cli(const std::string& args) {
  const std::string cmd = std::string(NPE_CLI_PATH) + " " + args + " 2>&1";
  CliRun r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// One small corpus, dataset and model directory shared by the tests below.
class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = testing::fresh_temp_dir("cli");
    const fs::path corpus = root_ / "corpus";
    CliRun r = npe_cli("synth --clips 8 --min-frames 150 --max-frames 250 --jitter-fraction 0 --seed 4 --out " +
                    corpus.string());
    ASSERT_EQ(r.status, 0) << r.output;
    r = npe_cli("ingest --input " + corpus.string() + " --mapping " + (corpus / "cmu_style.map").string() +
                " --validation-fraction 0.2 --out " + (root_ / "data.npk").string());
    ASSERT_EQ(r.status, 0) << r.output;
    r = npe_cli("train-ae --dataset " + (root_ / "data.npk").string() + " --epochs 3 --seed 1 --out " +
                (root_ / "models").string());
    ASSERT_EQ(r.status, 0) << r.output;
    for (const char* spec : {"hands LeftHand,RightHand", "feet LeftFoot,RightFoot", "head Head"}) {
      const std::string s = spec;
      const auto space = s.find(' ');
      r = npe_cli("train-solver --dataset " + (root_ / "data.npk").string() + " --models " +
                  (root_ / "models").string() + " --name " + s.substr(0, space) + " --joints " +
                  s.substr(space + 1) + " --epochs 1 --seed 2");
      ASSERT_EQ(r.status, 0) << r.output;
    }
  }

  static fs::path root_;
};

fs::path CliPipeline::root_;

TEST(Cli, IngestOfEmptyDirectoryFailsWithoutOutput) {
  const fs::path dir = testing::fresh_temp_dir("cli_empty");
  fs::create_directories(dir / "in");
  write_text_file(dir / "map.txt", synthetic_mapping_text());
  const CliRun r = npe_cli("ingest --input " + (dir / "in").string() + " --mapping " + (dir / "map.txt").string() +
                        " --out " + (dir / "data.npk").string());
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.output.find("empty_input"), std::string::npos) << r.output;
  EXPECT_FALSE(fs::exists(dir / "data.npk"));
}

TEST(Cli, IngestPoseCountMatchesRecountAndIsByteStable) {
  const fs::path dir = testing::fresh_temp_dir("cli_ingest");
  SynthCorpusOptions o;
  o.clips = 5;
  o.min_frames = 100;
  o.max_frames = 200;
  o.jitter_fraction = 0.4;
  o.seed = 3;
  CliRun r = npe_cli("synth --clips 5 --min-frames 100 --max-frames 200 --jitter-fraction 0.4 --seed 3 --out " +
                  (dir / "in").string());
  ASSERT_EQ(r.status, 0) << r.output;

  // Recount from the files' "Frames:" headers, minus the clips the filter must drop.
  std::size_t expected = 0, dropped = 0;
  for (const auto& f : synthesize_corpus(o)) {
    const std::string text = slurp(dir / "in" / f.filename);
    ASSERT_EQ(text, f.text);
    const std::size_t frames = std::stoul(text.substr(text.find("Frames:") + 7));
    if (f.options.inject_jitter) {
      ++dropped;
    } else {
      expected += frames;
    }
  }
  ASSERT_GT(dropped, 0u);

  const std::string args = "ingest --input " + (dir / "in").string() + " --mapping " +
                           (dir / "in" / "cmu_style.map").string() + " --seed 9 --out ";
  r = npe_cli(args + (dir / "a.npk").string());
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("poses " + std::to_string(expected) + "\n"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("dropped_jittery " + std::to_string(dropped) + "\n"), std::string::npos) << r.output;
  EXPECT_EQ(load_dataset(dir / "a.npk").pose_count(), expected);
  r = npe_cli(args + (dir / "b.npk").string());
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_EQ(slurp(dir / "a.npk"), slurp(dir / "b.npk"));
}

TEST_F(CliPipeline, TrainAeEchoesDefaults) {
  const CliRun r = npe_cli("train-ae --dataset " + (root_ / "data.npk").string() + " --out " +
                        (root_ / "echo").string() + " --epochs 1");
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("batch_size=256"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("learning_rate=0.0001"), std::string::npos);
  EXPECT_NE(r.output.find("latent_dim=64"), std::string::npos);
  const CliRun help = npe_cli("train-ae --help");
  EXPECT_NE(help.output.find("--epochs"), std::string::npos);
  EXPECT_NE(help.output.find("20"), std::string::npos);
}

TEST_F(CliPipeline, TrainAeDefaultEpochCountIsTwenty) {
  const fs::path cfg = root_ / "only_seed.cfg";
  write_text_file(cfg, "seed = 5\n");
  const CliRun r = npe_cli("train-ae --dataset " + (root_ / "data.npk").string() + " --config " + cfg.string() +
                        " --out " + (root_ / "defaults").string());
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("config: epochs=20 batch_size=256 learning_rate=0.0001 latent_dim=64"), std::string::npos)
      << r.output;
  EXPECT_NE(r.output.find("seed=5"), std::string::npos);
  EXPECT_NE(r.output.find("epoch 20 "), std::string::npos);
  const std::string log = slurp(root_ / "defaults" / "ae_loss.tsv");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 21);
}

TEST_F(CliPipeline, TrainSolverEchoesDefaults) {
  const CliRun r = npe_cli("train-solver --dataset " + (root_ / "data.npk").string() + " --models " +
                        (root_ / "models").string() + " --name hands --joints LeftHand,RightHand --out " +
                        (root_ / "solver_defaults").string());
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("config: epochs=5 "), std::string::npos) << r.output;
  EXPECT_NE(r.output.find(" k=0.01 "), std::string::npos);
  EXPECT_NE(r.output.find("epoch 5 "), std::string::npos);
}

TEST_F(CliPipeline, SameSeedGivesIdenticalWeights) {
  for (const char* out : {"seed_a", "seed_b"}) {
    const CliRun r = npe_cli("train-ae --dataset " + (root_ / "data.npk").string() + " --epochs 2 --seed 7 --out " +
                          (root_ / out).string());
    ASSERT_EQ(r.status, 0) << r.output;
  }
  EXPECT_EQ(slurp(root_ / "seed_a" / "ae.npw"), slurp(root_ / "seed_b" / "ae.npw"));
  EXPECT_EQ(slurp(root_ / "seed_a" / "ae.meta"), slurp(root_ / "seed_b" / "ae.meta"));
}

TEST_F(CliPipeline, ConfigFileSuppliesOptionsAndRejectsUnknownKeys) {
  const fs::path cfg = root_ / "train.cfg";
  write_text_file(cfg, "# quick run\nepochs = 1\nbatch_size = 64\nseed = 3\n");
  CliRun r = npe_cli("train-ae --dataset " + (root_ / "data.npk").string() + " --config " + cfg.string() + " --out " +
                  (root_ / "cfg_models").string());
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("epochs=1 batch_size=64"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("seed=3"), std::string::npos);

  // Command-line values win over the file.
  r = npe_cli("train-ae --dataset " + (root_ / "data.npk").string() + " --config " + cfg.string() +
              " --batch-size 32 --out " + (root_ / "cfg_models2").string());
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("epochs=1 batch_size=32"), std::string::npos) << r.output;

  write_text_file(cfg, "epoch_count = 1\n");
  r = npe_cli("train-ae --dataset " + (root_ / "data.npk").string() + " --config " + cfg.string() + " --out " +
              (root_ / "cfg_models3").string());
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.output.find("epoch_count"), std::string::npos) << r.output;
}

TEST_F(CliPipeline, TrainSolverNeedsAutoencoder) {
  const CliRun r = npe_cli("train-solver --dataset " + (root_ / "data.npk").string() + " --models " +
                        (root_ / "nowhere").string() + " --name hands --joints LeftHand,RightHand");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.output.find("error"), std::string::npos);
}

TEST_F(CliPipeline, SolveOneShot) {
  const PoseDataset ds = load_dataset(root_ / "data.npk");
  const PoseVector start = ds.clips[0].poses[0], target = ds.clips[0].poses[30];
  nlohmann::json req = {{"pose", std::vector<float>(start.values.begin(), start.values.end())},
                        {"specs",
                         {{{"joints", {"LeftHand", "RightHand"}},
                           {"positions",
                            {{target.joint(8).x(), target.joint(8).y(), target.joint(8).z()},
                             {target.joint(12).x(), target.joint(12).y(), target.joint(12).z()}}}}}},
                        {"mode", "both"},
                        {"post_process", true}};
  write_text_file(root_ / "req.json", req.dump());
  const CliRun r = npe_cli("solve --models " + (root_ / "models").string() + " --in " + (root_ / "req.json").string() +
                        " --out " + (root_ / "reply.json").string());
  ASSERT_EQ(r.status, 0) << r.output;
  const auto reply = nlohmann::json::parse(slurp(root_ / "reply.json"));
  EXPECT_EQ(reply["type"], "solve_result");
  EXPECT_EQ(reply["results"]["neural"]["pose"].size(), 63u);
  EXPECT_EQ(reply["results"]["fabrik"]["residuals"].size(), 2u);
}

TEST_F(CliPipeline, BenchWritesTable) {
  const CliRun r = npe_cli("bench --models " + (root_ / "models").string() + " --dataset " +
                        (root_ / "data.npk").string() + " --iterations 20 --repeats 2 --out " +
                        (root_ / "bench.tsv").string());
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("FABRIK(2)"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("Ours(5) +post"), std::string::npos);
  const std::string tsv = slurp(root_ / "bench.tsv");
  EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 7);
  EXPECT_EQ(tsv.rfind("method\teffectors", 0), 0u);
}

TEST_F(CliPipeline, BenchWithoutModelsFails) {
  const CliRun r = npe_cli("bench --models " + (root_ / "nowhere").string() + " --dataset " +
                        (root_ / "data.npk").string());
  EXPECT_NE(r.status, 0);
}

}  // namespace
}  // namespace npe
