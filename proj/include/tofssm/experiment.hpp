#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tofssm/metrics.hpp"
#include "tofssm/sim.hpp"

namespace tofssm {

struct MatrixOptions {
  std::vector<Approach> approaches;  // empty = config defaults
  std::vector<SsmMode> modes;
  int trials = 0;          // 0 = config default
  std::uint64_t seed = 0;  // 0 = config default
  std::string out_dir = "out";
  std::string replay_file;  // non-empty: one recording drives every trial
  std::ostream* log = nullptr;
};

struct MatrixRunResult {
  MatrixReport report;
  bool all_traced = true;
  std::string report_json;
  std::string report_csv;
};

inline std::string cell_stem(Approach a, SsmMode m, int trial) {
  return std::string(to_string(a)) + "_" + to_string(m) + "_t" + std::to_string(trial);
}

namespace report_detail {

inline nlohmann::ordered_json agg_json(const Aggregate& a) {
  return {{"mean", a.mean}, {"stddev", a.stddev}, {"n", a.n}};
}

inline nlohmann::ordered_json trial_json(const TrialMetrics& m) {
  return {{"trial", m.trial},
          {"completed", m.completed},
          {"duration", m.duration},
          {"productivity", m.productivity},
          {"safety_avg", m.safety_avg},
          {"safety_min", m.safety_min},
          {"safety_floored_ticks", m.safety_floored_ticks},
          {"rmse", m.rmse},
          {"reaction_mean", m.reaction_mean},
          {"reaction_count", m.reaction_count},
          {"stop_events", m.stop_events},
          {"reduce_events", m.reduce_events},
          {"stop_duration_mean", m.stop_duration_mean},
          {"reduce_duration_mean", m.reduce_duration_mean},
          {"dv_stop_mean", m.dv_stop_mean},
          {"sep_stop_mean", m.sep_stop_mean},
          {"sep_reduce_mean", m.sep_reduce_mean},
          {"min_d_gt", m.min_d_gt}};
}

}  // namespace report_detail

inline nlohmann::ordered_json report_to_json(const MatrixReport& rep) {
  nlohmann::ordered_json j;
  j["t_no_hri"] = rep.t_no_hri;
  j["seed"] = rep.seed;
  j["trials_per_cell"] = rep.trials_per_cell;
  j["cells"] = nlohmann::ordered_json::array();
  for (const auto& cell : rep.cells) {
    nlohmann::ordered_json c;
    c["approach"] = to_string(cell.approach);
    c["mode"] = to_string(cell.mode);
    c["completed"] = cell.completed_count();
    c["trials"] = nlohmann::ordered_json::array();
    for (const auto& t : cell.trials) c["trials"].push_back(report_detail::trial_json(t));
    nlohmann::ordered_json agg;
    agg["productivity"] = report_detail::agg_json(cell.agg(&TrialMetrics::productivity));
    agg["safety_avg"] = report_detail::agg_json(cell.agg(&TrialMetrics::safety_avg));
    agg["safety_min"] = report_detail::agg_json(cell.agg(&TrialMetrics::safety_min));
    agg["rmse"] = report_detail::agg_json(cell.agg(&TrialMetrics::rmse));
    agg["reaction_mean"] = report_detail::agg_json(cell.agg(&TrialMetrics::reaction_mean));
    agg["stop_duration_mean"] =
        report_detail::agg_json(cell.agg(&TrialMetrics::stop_duration_mean));
    agg["reduce_duration_mean"] =
        report_detail::agg_json(cell.agg(&TrialMetrics::reduce_duration_mean));
    agg["dv_stop_mean"] = report_detail::agg_json(cell.agg(&TrialMetrics::dv_stop_mean));
    agg["sep_stop_mean"] = report_detail::agg_json(cell.agg(&TrialMetrics::sep_stop_mean));
    agg["sep_reduce_mean"] = report_detail::agg_json(cell.agg(&TrialMetrics::sep_reduce_mean));
    c["aggregate"] = agg;
    j["cells"].push_back(c);
  }
  return j;
}

inline void write_report_json(const MatrixReport& rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_report_json: cannot open " + path);
  out << report_to_json(rep).dump(2) << "\n";
}

inline void write_report_csv(const MatrixReport& rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_report_csv: cannot open " + path);
  out << "approach,mode,trial,completed,duration,productivity,safety_avg,safety_min,"
         "rmse,reaction_mean,reaction_count,stop_events,reduce_events,"
         "stop_duration_mean,reduce_duration_mean,dv_stop_mean,sep_stop_mean,"
         "sep_reduce_mean,min_d_gt\n";
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
  };
  for (const auto& cell : rep.cells) {
    for (const auto& m : cell.trials) {
      out << to_string(cell.approach) << ',' << to_string(cell.mode) << ',' << m.trial << ','
          << (m.completed ? 1 : 0) << ',' << num(m.duration) << ',' << num(m.productivity)
          << ',' << num(m.safety_avg) << ',' << num(m.safety_min) << ',' << num(m.rmse) << ','
          << num(m.reaction_mean) << ',' << m.reaction_count << ',' << m.stop_events << ','
          << m.reduce_events << ',' << num(m.stop_duration_mean) << ','
          << num(m.reduce_duration_mean) << ',' << num(m.dv_stop_mean) << ','
          << num(m.sep_stop_mean) << ',' << num(m.sep_reduce_mean) << ',' << num(m.min_d_gt)
          << "\n";
    }
    const char* rows[2] = {"mean", "stddev"};
    for (int which = 0; which < 2; ++which) {
      auto pick = [&](double TrialMetrics::* f) {
        const Aggregate a = cell.agg(f);
        return which == 0 ? a.mean : a.stddev;
      };
      out << to_string(cell.approach) << ',' << to_string(cell.mode) << ',' << rows[which]
          << ',' << cell.completed_count() << ',' << num(pick(&TrialMetrics::duration)) << ','
          << num(pick(&TrialMetrics::productivity)) << ',' << num(pick(&TrialMetrics::safety_avg))
          << ',' << num(pick(&TrialMetrics::safety_min)) << ',' << num(pick(&TrialMetrics::rmse))
          << ',' << num(pick(&TrialMetrics::reaction_mean)) << ",,,,"
          << num(pick(&TrialMetrics::stop_duration_mean)) << ','
          << num(pick(&TrialMetrics::reduce_duration_mean)) << ','
          << num(pick(&TrialMetrics::dv_stop_mean)) << ','
          << num(pick(&TrialMetrics::sep_stop_mean)) << ','
          << num(pick(&TrialMetrics::sep_reduce_mean)) << ','
          << num(pick(&TrialMetrics::min_d_gt)) << "\n";
    }
  }
}

inline void write_trial_summary_json(const TrialMetrics& m, const TrialSummary& s,
                                     const std::string& path) {
  nlohmann::ordered_json j = report_detail::trial_json(m);
  j["approach"] = to_string(s.approach);
  j["mode"] = to_string(s.mode);
  j["seed"] = s.seed;
  j["human_present"] = s.human_present;
  j["items_done"] = s.items_done;
  j["ring_samples"] = s.ring_samples;
  j["unmasked_self_hits"] = s.unmasked_self_hits;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trial_summary_json: cannot open " + path);
  out << j.dump(2) << "\n";
}

/// Runs the requested cells of the approach x mode matrix: measures the
/// human-free baseline, records one human trajectory per trial, then replays
/// each recording through every cell so all approaches face the same human.
/// Artifacts land under out_dir: traces/, trajectories/, report.json/csv.
inline MatrixRunResult run_matrix(const Config& cfg, const MatrixOptions& opts) {
  namespace fs = std::filesystem;
  const auto approaches = opts.approaches.empty() ? cfg.matrix.approaches : opts.approaches;
  const auto modes = opts.modes.empty() ? cfg.matrix.modes : opts.modes;
  const int trials = opts.trials > 0 ? opts.trials : cfg.sim.trials;
  const std::uint64_t seed = opts.seed != 0 ? opts.seed : cfg.sim.seed;
  if (approaches.empty() || modes.empty() || trials <= 0) {
    throw std::invalid_argument("run_matrix: empty approach/mode/trial selection");
  }

  const fs::path out(opts.out_dir);
  fs::create_directories(out / "traces");
  fs::create_directories(out / "trajectories");

  MatrixRunResult result;
  auto& rep = result.report;
  rep.seed = seed;
  rep.trials_per_cell = trials;

  auto log = [&](const std::string& line) {
    if (opts.log) *opts.log << line << std::endl;
  };

  // Task-only baseline: fixes the no-interference completion time.
  TrialSpec base;
  base.approach = Approach::ideal;
  base.mode = SsmMode::vo;
  base.trial = -1;
  base.seed = seed;
  base.human_present = false;
  base.trace_path = (out / "traces" / "baseline.csv").string();
  const auto baseline = run_trial(cfg, base);
  if (!baseline.summary.completed) {
    throw std::runtime_error("run_matrix: human-free baseline did not complete");
  }
  rep.t_no_hri = baseline.summary.duration;
  {
    nlohmann::ordered_json j;
    j["t_no_hri"] = rep.t_no_hri;
    j["seed"] = seed;
    std::ofstream bs(out / "traces" / "baseline.summary.json");
    bs << j.dump(2) << "\n";
  }
  log("baseline: task completes in " + std::to_string(rep.t_no_hri) + " s without a human");

  const double timeout = cfg.sim.timeout_factor * rep.t_no_hri;

  // One canonical human trajectory per trial, shared across every cell.
  std::vector<TrajectoryRecording> recordings;
  recordings.reserve(trials);
  for (int k = 0; k < trials; ++k) {
    if (!opts.replay_file.empty()) {
      recordings.push_back(load_trajectory_csv(opts.replay_file));
    } else {
      HumanAvatar av = cfg.avatar;
      av.path.phase += k * cfg.avatar.path.period / trials;
      recordings.push_back(record_trajectory(av, cfg.sim.robot_hz, timeout + 1.0));
    }
    write_trajectory_csv(recordings.back(),
                         (out / "trajectories" / ("trial" + std::to_string(k) + ".csv")).string());
  }

  for (const Approach a : approaches) {
    for (const SsmMode m : modes) {
      CellReport cell;
      cell.approach = a;
      cell.mode = m;
      const SsmParams params = resolve_ssm_params(cfg, a, m);
      for (int k = 0; k < trials; ++k) {
        TrialSpec spec;
        spec.approach = a;
        spec.mode = m;
        spec.trial = k;
        spec.seed = seed;
        spec.replay = &recordings[k];
        spec.timeout = timeout;
        spec.keep_rows = true;
        const std::string stem = cell_stem(a, m, k);
        spec.trace_path = (out / "traces" / (stem + ".csv")).string();
        const auto trial = run_trial(cfg, spec);
        if (!fs::exists(spec.trace_path)) result.all_traced = false;
        const auto tm = compute_trial_metrics(trial.rows, trial.summary, params, rep.t_no_hri);
        write_trial_summary_json(tm, trial.summary,
                                 (out / "traces" / (stem + ".summary.json")).string());
        char line[160];
        std::snprintf(line, sizeof(line),
                      "%-5s %-3s trial %d: %s in %.2f s, stops %d, rmse %.4f", to_string(a),
                      to_string(m), k, trial.summary.completed ? "done" : "TIMEOUT",
                      trial.summary.duration, trial.summary.stop_events, tm.rmse);
        log(line);
        cell.trials.push_back(tm);
      }
      rep.cells.push_back(std::move(cell));
    }
  }

  result.report_json = (out / "report.json").string();
  result.report_csv = (out / "report.csv").string();
  write_report_json(rep, result.report_json);
  write_report_csv(rep, result.report_csv);
  return result;
}

/// Rebuilds the consolidated report from trace files already on disk.
inline MatrixReport reaggregate(const Config& cfg, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path out(out_dir);
  std::ifstream bs(out / "traces" / "baseline.summary.json");
  if (!bs) {
    throw std::runtime_error("reaggregate: missing baseline summary in " + out_dir);
  }
  const auto bj = nlohmann::json::parse(bs);
  MatrixReport rep;
  rep.t_no_hri = bj.at("t_no_hri").get<double>();
  rep.seed = bj.value("seed", 0ULL);

  for (const Approach a : cfg.matrix.approaches) {
    for (const SsmMode m : cfg.matrix.modes) {
      CellReport cell;
      cell.approach = a;
      cell.mode = m;
      const SsmParams params = resolve_ssm_params(cfg, a, m);
      for (int k = 0;; ++k) {
        const fs::path trace = out / "traces" / (cell_stem(a, m, k) + ".csv");
        if (!fs::exists(trace)) break;
        const auto rows = load_trace_csv(trace.string(), cfg.chain.dof());
        TrialSummary s;
        s.approach = a;
        s.mode = m;
        s.trial = k;
        s.completed = false;
        s.min_d_gt = std::numeric_limits<double>::infinity();
        for (const auto& r : rows) {
          if (std::isfinite(r.d_gt)) s.min_d_gt = std::min(s.min_d_gt, r.d_gt);
          if (metrics_detail::has_event(r.events, "stop")) ++s.stop_events;
          if (metrics_detail::has_event(r.events, "reduce")) ++s.reduce_events;
          if (metrics_detail::has_event(r.events, "done")) s.completed = true;
        }
        if (!rows.empty()) s.duration = rows.back().t;
        if (!std::isfinite(s.min_d_gt)) s.min_d_gt = std::numeric_limits<double>::quiet_NaN();
        cell.trials.push_back(compute_trial_metrics(rows, s, params, rep.t_no_hri));
      }
      if (!cell.trials.empty()) {
        rep.trials_per_cell = std::max(rep.trials_per_cell,
                                       static_cast<int>(cell.trials.size()));
        rep.cells.push_back(std::move(cell));
      }
    }
  }
  if (rep.cells.empty()) {
    throw std::runtime_error("reaggregate: no trace files found under " + out_dir);
  }
  return rep;
}

}  // namespace tofssm
