#include "npe/bench.hpp"

#include "npe/error.hpp"
#include "npe/models.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

namespace npe {

namespace {

using Clock = std::chrono::steady_clock;

// Keeps results observable so the timed calls are not optimized away.
volatile float g_sink = 0.0f;

const SolverModel& named_solver(const ModelSet& models, const std::string& name) {
  for (const auto& s : models.solvers) {
    if (s.name == name) return s;
  }
  throw Error(ErrorCode::NoSolverForJoints, "model set has no solver named '" + name + "'");
}

std::vector<JointTarget> joint_targets(const std::vector<TargetSpec>& specs) {
  std::vector<JointTarget> out;
  for (const auto& spec : specs) {
    for (std::size_t i = 0; i < spec.joints.size(); ++i) out.push_back({spec.joints[i], spec.positions[i]});
  }
  return out;
}

template <class F>
double fastest_ms(std::size_t repeats, F&& solve) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    const PoseVector out = solve();
    const auto t1 = Clock::now();
    g_sink = g_sink + out.values[0];
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void summarize(BenchRow& row, const std::vector<double>& ms) {
  row.iterations = ms.size();
  double sum = 0.0;
  for (double v : ms) sum += v;
  row.mean_ms = ms.empty() ? 0.0 : sum / static_cast<double>(ms.size());
  double var = 0.0;
  for (double v : ms) var += (v - row.mean_ms) * (v - row.mean_ms);
  row.std_ms = ms.empty() ? 0.0 : std::sqrt(var / static_cast<double>(ms.size()));
}

}  // namespace

const BenchRow* BenchReport::find(const std::string& method, std::size_t effectors, bool post_process) const {
  for (const auto& r : rows) {
    if (r.method == method && r.effectors == effectors && r.post_process == post_process) return &r;
  }
  return nullptr;
}

std::string BenchReport::to_tsv() const {
  std::string out = "method\teffectors\tpost_process\titerations\tmean_ms\tstd_ms\tfootprint_kb\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s\t%zu\t%d\t%zu\t%.6f\t%.6f\t", r.method.c_str(), r.effectors,
                  r.post_process ? 1 : 0, r.iterations, r.mean_ms, r.std_ms);
    out += buf;
    if (r.footprint_kb) {
      std::snprintf(buf, sizeof buf, "%.1f", *r.footprint_kb);
      out += buf;
    } else {
      out += "-";
    }
    out += "\n";
  }
  return out;
}

std::string BenchReport::to_table() const {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-22s %12s %12s %14s\n", "solver", "mean ms", "std ms", "weights kB");
  out << buf;
  for (const auto& r : rows) {
    std::string label = r.method + "(" + std::to_string(r.effectors) + ")" + (r.post_process ? " +post" : "");
    std::string kb = r.footprint_kb ? std::to_string(static_cast<long>(std::lround(*r.footprint_kb))) : "-";
    std::snprintf(buf, sizeof buf, "%-22s %12.4f %12.4f %14s\n", label.c_str(), r.mean_ms, r.std_ms, kb.c_str());
    out << buf;
  }
  out << iterations << " iterations per row (fastest of " << repeats << " runs each), single thread, seed " << seed
      << "\n";
  return out.str();
}

std::vector<BenchCase> sample_bench_cases(const PoseDataset& dataset, std::size_t count, std::uint64_t seed) {
  Split split = Split::Validation;
  bool usable = false;
  for (std::size_t c : dataset.clip_indices(Split::Validation)) usable = usable || dataset.clips[c].poses.size() >= 2;
  if (!usable) split = Split::Train;
  std::mt19937_64 rng(seed);
  std::vector<BenchCase> cases;
  cases.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    TrainingPair p = sample_training_pair(dataset, rng, split);
    cases.push_back({p.x, p.x_prime});
  }
  return cases;
}

std::vector<TargetSpec> target_specs_for(const ModelSet& models, const std::vector<std::string>& solver_names,
                                         const PoseVector& target_pose) {
  std::vector<TargetSpec> specs;
  for (const auto& name : solver_names) {
    const SolverModel& s = named_solver(models, name);
    TargetSpec spec;
    spec.joints = s.target_joints;
    for (std::size_t j : s.target_joints) spec.positions.push_back(target_pose.joint(j));
    specs.push_back(std::move(spec));
  }
  return specs;
}

BenchReport run_bench(const ModelSet& models, const std::vector<BenchCase>& cases, const BenchOptions& options) {
  if (cases.empty()) throw Error(ErrorCode::EmptyInput, "benchmark needs at least one case");
  options.fabrik.validate();
  const std::vector<std::string> two = {options.two_target_solver};
  const auto& five = options.five_target_solvers;
  const std::size_t n2 = named_solver(models, options.two_target_solver).target_joints.size();
  std::size_t n5 = 0;
  for (const auto& name : five) n5 += named_solver(models, name).target_joints.size();

  // Targets are prepared outside the timed region.
  std::vector<std::vector<TargetSpec>> specs2, specs5;
  std::vector<std::vector<JointTarget>> joints2, joints5;
  for (const auto& c : cases) {
    specs2.push_back(target_specs_for(models, two, c.target_pose));
    specs5.push_back(target_specs_for(models, five, c.target_pose));
    joints2.push_back(joint_targets(specs2.back()));
    joints5.push_back(joint_targets(specs5.back()));
  }
  const SkeletonTopology& topo = canonical_topology();
  struct Method {
    BenchRow row;
    std::function<PoseVector(std::size_t)> solve;
    std::vector<double> ms;
  };
  std::vector<Method> methods;
  auto add = [&](std::string name, std::size_t n, bool post, std::function<PoseVector(std::size_t)> f) {
    Method m;
    m.row.method = std::move(name);
    m.row.effectors = n;
    m.row.post_process = post;
    m.solve = std::move(f);
    methods.push_back(std::move(m));
  };
  add("FABRIK", n2, false, [&](std::size_t i) {
    return fabrik_solve_fullbody(cases[i].pose, topo, joints2[i], options.fabrik);
  });
  for (bool post : {false, true}) {
    add("Ours", n2, post,
        [&, post](std::size_t i) { return solve_pose(cases[i].pose, specs2[i].front(), models, post); });
    methods.back().row.footprint_kb = static_cast<double>(weight_footprint_bytes(models, two)) / 1000.0;
  }
  add("FABRIK", n5, false, [&](std::size_t i) {
    return fabrik_solve_fullbody(cases[i].pose, topo, joints5[i], options.fabrik);
  });
  for (bool post : {false, true}) {
    add("Ours", n5, post,
        [&, post](std::size_t i) { return compose_solvers(cases[i].pose, specs5[i], models, post); });
    methods.back().row.footprint_kb = static_cast<double>(weight_footprint_bytes(models, five)) / 1000.0;
  }

  for (std::size_t i = 0; i < std::min(options.warmup, cases.size()); ++i) {
    for (auto& m : methods) g_sink = g_sink + m.solve(i).values[0];
  }
  const std::size_t repeats = std::max<std::size_t>(options.repeats, 1);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    for (auto& m : methods) m.ms.push_back(fastest_ms(repeats, [&] { return m.solve(i); }));
  }

  BenchReport report;
  report.iterations = cases.size();
  report.repeats = repeats;
  report.seed = options.seed;
  for (auto& m : methods) {
    summarize(m.row, m.ms);
    report.rows.push_back(std::move(m.row));
  }
  return report;
}

TimingSpread neural_runtime_spread(const ModelSet& models, const std::vector<BenchCase>& cases,
                                   const std::string& solver_name, std::size_t repeats) {
  if (cases.empty() || repeats == 0) throw Error(ErrorCode::EmptyInput, "timing spread needs cases and repeats");
  std::vector<double> best;
  best.reserve(cases.size());
  for (const auto& c : cases) {
    const TargetSpec spec = target_specs_for(models, {solver_name}, c.target_pose).front();
    best.push_back(fastest_ms(repeats, [&] { return solve_pose(c.pose, spec, models, false); }));
  }
  TimingSpread s;
  s.samples = best.size();
  for (double v : best) s.mean_ms += v;
  s.mean_ms /= static_cast<double>(best.size());
  for (double v : best) s.std_ms += (v - s.mean_ms) * (v - s.mean_ms);
  s.std_ms = std::sqrt(s.std_ms / static_cast<double>(best.size()));
  return s;
}

}  // namespace npe
