// tofssm command-line runner: experiment matrix, config validation, avatar
// trajectory capture, report re-aggregation and the ray-cast benchmark.
#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tofssm/experiment.hpp"
#include "tofssm/metrics.hpp"
#include "tofssm/sim.hpp"

namespace {

using namespace tofssm;

int load_checked(const std::string& path, Config& cfg) {
  try {
    cfg = load_config(path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  const auto diags = validate_config(cfg);
  if (!diags.empty()) {
    for (const auto& d : diags) std::cerr << "error: " << d << "\n";
    return 1;
  }
  return 0;
}

bool parse_approaches(const std::vector<std::string>& names, std::vector<Approach>& out) {
  for (const auto& n : names) {
    Approach a;
    if (!parse_approach(n, a)) {
      std::cerr << "error: unknown approach '" << n << "' (real|ideal|lidar)\n";
      return false;
    }
    out.push_back(a);
  }
  return true;
}

bool parse_modes(const std::vector<std::string>& names, std::vector<SsmMode>& out) {
  for (const auto& n : names) {
    SsmMode m;
    if (!parse_mode(n, m)) {
      std::cerr << "error: unknown mode '" << n << "' (Vo|Vr|SM)\n";
      return false;
    }
    out.push_back(m);
  }
  return true;
}

void print_cell_table(const MatrixReport& rep) {
  std::printf("%-6s %-4s %10s %12s %10s %10s %9s\n", "appr", "mode", "complete",
              "productivity", "safety", "rmse", "react");
  for (const auto& cell : rep.cells) {
    const auto prod = cell.agg(&TrialMetrics::productivity);
    const auto safety = cell.agg(&TrialMetrics::safety_avg);
    const auto rmse = cell.agg(&TrialMetrics::rmse);
    const auto react = cell.agg(&TrialMetrics::reaction_mean);
    std::printf("%-6s %-4s %6d/%-3zu %12.4f %10.2f %10.4f %9.3f\n", to_string(cell.approach),
                to_string(cell.mode), cell.completed_count(), cell.trials.size(), prod.mean,
                safety.mean, rmse.mean, react.mean);
  }
  std::printf("baseline task time: %.3f s\n", rep.t_no_hri);
}

int cmd_run(const std::string& config_path, const MatrixOptions& opts) {
  Config cfg;
  if (load_checked(config_path, cfg) != 0) return 1;
  try {
    const auto result = run_matrix(cfg, opts);
    print_cell_table(result.report);
    std::printf("report: %s\n", result.report_json.c_str());
    return result.all_traced ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_validate(const std::string& config_path) {
  Config cfg;
  if (load_checked(config_path, cfg) != 0) return 1;
  std::printf("%s: ok\n", config_path.c_str());
  return 0;
}

int cmd_record(const std::string& config_path, const std::string& out_file, double duration,
               double phase) {
  Config cfg;
  if (load_checked(config_path, cfg) != 0) return 1;
  HumanAvatar av = cfg.avatar;
  av.path.phase += phase;
  if (duration <= 0.0) duration = av.path.period;
  const auto rec = record_trajectory(av, cfg.sim.robot_hz, duration);
  write_trajectory_csv(rec, out_file);
  std::printf("recorded %zu samples over %.3f s -> %s\n", rec.t.size(), duration,
              out_file.c_str());
  return 0;
}

int cmd_report(const std::string& config_path, const std::string& out_dir) {
  Config cfg;
  if (load_checked(config_path, cfg) != 0) return 1;
  try {
    const auto rep = reaggregate(cfg, out_dir);
    print_cell_table(rep);
    write_report_json(rep, out_dir + "/report.json");
    write_report_csv(rep, out_dir + "/report.csv");
    std::printf("report: %s/report.json\n", out_dir.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_bench(const std::string& config_path) {
  Config cfg;
  if (load_checked(config_path, cfg) != 0) return 1;

  // Assemble a representative mid-task snapshot: arm posed over the statics
  // with the human nearby, then time full ring cycles (all cone rays plus
  // masking recasts) and normalize to a 600-ray figure.
  Eigen::VectorXd q = cfg.task.posture;
  q[cfg.task.swept_joint] = 0.9;
  const auto poses = forward_kinematics(cfg.chain, q);
  const auto rings = ring_states(cfg.chain, poses, Eigen::VectorXd::Zero(cfg.chain.dof()));
  const auto robot_caps = posed_capsules(cfg.chain, poses);
  Scene scene;
  scene.prims = cfg.statics;
  for (size_t i = 0; i < robot_caps.size(); ++i) {
    scene.prims.push_back({static_cast<int>(1 + i), PrimTag::robot, robot_caps[i]});
  }
  const AvatarState human = advance_avatar(cfg.avatar, 0.25 * cfg.avatar.path.period);
  for (size_t i = 0; i < human.capsules.size(); ++i) {
    scene.prims.push_back({static_cast<int>(2000 + i), PrimTag::dynamic, human.capsules[i]});
  }

  std::mt19937_64 rng(cfg.sim.seed);
  const int cone = kSensorsPerRing * (cfg.ring.cone_rays + 1);
  long rays = 0;
  double sink = 0.0;
  const int reps = 200;
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) {
    for (const auto& ring : rings) {
      const auto sample = sample_ring(cfg.ring, scene, ring.pose, 0.0, rng);
      const auto reading = process_ring(cfg.ring, scene, ring.pose, sample);
      sink += reading.d_min;
      rays += cone;
      for (int jx = 0; jx < kSensorsPerRing; ++jx) rays += sample.sensors[jx].hit ? 1 : 0;
    }
  }
  const auto t1 = std::chrono::steady_clock::now();
  const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  const double per600 = ms / static_cast<double>(rays) * 600.0;
  std::printf("cast %ld rays (cone + mask recasts) in %.3f ms total\n", rays, ms);
  std::printf("average per 600 rays: %.4f ms (budget 2 ms)\n", per600);
  // Keep the optimizer from discarding the sampled readings.
  if (!std::isfinite(sink)) std::fprintf(stderr, "bench: non-finite readings\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic SSM simulator and experiment runner"};
  app.require_subcommand(1);

  std::string config_path = "configs/default.json";
  app.add_option("--config", config_path, "config JSON path")
      ->envname("TOFSSM_CONFIG");

  auto* run = app.add_subcommand("run", "run the experiment matrix");
  std::vector<std::string> approach_names, mode_names;
  MatrixOptions opts;
  run->add_option("--approaches", approach_names, "subset of real,ideal,lidar")->delimiter(',');
  run->add_option("--modes", mode_names, "subset of Vo,Vr,SM")->delimiter(',');
  run->add_option("--trials", opts.trials, "trials per cell")->envname("TOFSSM_TRIALS");
  run->add_option("--seed", opts.seed, "base RNG seed")->envname("TOFSSM_SEED");
  run->add_option("--out", opts.out_dir, "output directory")->envname("TOFSSM_OUT");
  run->add_option("--replay", opts.replay_file, "human trajectory CSV driving every trial");

  auto* validate = app.add_subcommand("validate", "check a config file");

  auto* record = app.add_subcommand("record", "capture the avatar trajectory to CSV");
  std::string record_out = "trajectory.csv";
  double record_duration = 0.0, record_phase = 0.0;
  record->add_option("--out", record_out, "output CSV file");
  record->add_option("--duration", record_duration, "seconds to record (default: one period)");
  record->add_option("--phase", record_phase, "path phase offset, s");

  auto* report = app.add_subcommand("report", "re-aggregate metrics from existing traces");
  std::string report_dir = "out";
  report->add_option("--out", report_dir, "directory with traces/")->envname("TOFSSM_OUT");

  auto* bench = app.add_subcommand("bench", "measure ray-cast + masking latency");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    if (!parse_approaches(approach_names, opts.approaches)) return 1;
    if (!parse_modes(mode_names, opts.modes)) return 1;
    opts.log = &std::cout;
    return cmd_run(config_path, opts);
  }
  if (validate->parsed()) return cmd_validate(config_path);
  if (record->parsed()) return cmd_record(config_path, record_out, record_duration, record_phase);
  if (report->parsed()) return cmd_report(config_path, report_dir);
  if (bench->parsed()) return cmd_bench(config_path);
  return 1;
}
