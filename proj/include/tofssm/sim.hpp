#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tofssm/avatar.hpp"
#include "tofssm/config.hpp"
#include "tofssm/controller.hpp"
#include "tofssm/kinematics.hpp"
#include "tofssm/lidar2d.hpp"
#include "tofssm/scene.hpp"
#include "tofssm/ssm.hpp"
#include "tofssm/tof_ring.hpp"

namespace tofssm {

/// One logged base tick. Channel slots hold the three rings for ring-based
/// sensing; the planar scanner logs as channel 0 with the others inactive.
struct ChannelLog {
  bool active = false;
  double d_min = 0.0;
  double dist = 0.0;
  double k_o = 0.0;
  double k_l = 0.0;
  double d_c = 0.0;
  double d_r = 0.0;
  double dsi_hat = 0.0;
  int psi = 2;
  int mask_bits = 0xFF;
};

struct TraceRow {
  double t = 0.0;
  std::vector<double> q, qdot;
  double rho = 1.0;
  int psi = 2;
  double tcp_speed = 0.0;
  double d_gt = 0.0;
  double d_ideal = 0.0;
  double d_lidar = 0.0;   // nan when not sensing with the scanner
  double d_est = 0.0;     // active approach's separation estimate, nan if clear
  int detect = 0;
  std::array<ChannelLog, 3> ch;
  std::string events;
};

struct TrialSummary {
  Approach approach = Approach::ideal;
  SsmMode mode = SsmMode::vo;
  int trial = 0;
  std::uint64_t seed = 0;
  bool human_present = true;
  bool completed = false;
  double duration = 0.0;
  int items_done = 0;
  int stop_events = 0;
  int reduce_events = 0;
  double min_d_gt = 0.0;
  int ring_samples = 0;        // sensor readings taken
  int unmasked_self_hits = 0;  // robot/restricted returns that survived masking
};

struct TrialSpec {
  Approach approach = Approach::ideal;
  SsmMode mode = SsmMode::vo;
  int trial = 0;
  std::uint64_t seed = 1;
  bool human_present = true;
  double phase = 0.0;                          // parametric path offset, s
  const TrajectoryRecording* replay = nullptr; // overrides the parametric path
  double timeout = 0.0;                        // 0 = derive from the task length
  bool keep_rows = false;
  std::string trace_path;                      // empty = no file output
};

namespace sim_detail {

inline void append_num(std::string& s, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  s += buf;
}

}  // namespace sim_detail

inline std::string trace_header(int dof) {
  std::string h = "t";
  for (int i = 0; i < dof; ++i) h += ",q" + std::to_string(i);
  for (int i = 0; i < dof; ++i) h += ",qd" + std::to_string(i);
  h += ",rho,psi,tcp_speed,d_gt,d_ideal,d_lidar,d_est,detect";
  for (int c = 0; c < 3; ++c) {
    const std::string p = ",ch" + std::to_string(c) + "_";
    h += p + "active" + p + "dmin" + p + "dist" + p + "ko" + p + "kl" + p + "dc" + p + "dr" +
         p + "dsi" + p + "psi" + p + "mask";
  }
  h += ",events";
  return h;
}

inline std::string format_trace_row(const TraceRow& r) {
  using sim_detail::append_num;
  std::string s;
  s.reserve(640);
  append_num(s, r.t);
  for (double v : r.q) { s += ','; append_num(s, v); }
  for (double v : r.qdot) { s += ','; append_num(s, v); }
  s += ','; append_num(s, r.rho);
  s += ',' + std::to_string(r.psi);
  s += ','; append_num(s, r.tcp_speed);
  s += ','; append_num(s, r.d_gt);
  s += ','; append_num(s, r.d_ideal);
  s += ','; append_num(s, r.d_lidar);
  s += ','; append_num(s, r.d_est);
  s += ',' + std::to_string(r.detect);
  for (const auto& c : r.ch) {
    s += ',' + std::to_string(c.active ? 1 : 0);
    s += ','; append_num(s, c.d_min);
    s += ','; append_num(s, c.dist);
    s += ','; append_num(s, c.k_o);
    s += ','; append_num(s, c.k_l);
    s += ','; append_num(s, c.d_c);
    s += ','; append_num(s, c.d_r);
    s += ','; append_num(s, c.dsi_hat);
    s += ',' + std::to_string(c.psi);
    s += ',' + std::to_string(c.mask_bits);
  }
  s += ',' + r.events;
  return s;
}

struct TrialResult {
  TrialSummary summary;
  std::vector<TraceRow> rows;  // populated when keep_rows was set
};

/// Reference single-threaded simulation of one trial. All subsystems fire on
/// integer multiples of the base step; sensing never uses state newer than
/// the current tick.
inline TrialResult run_trial(const Config& cfg, const TrialSpec& spec) {
  const double dt = 1.0 / cfg.sim.robot_hz;
  const int ring_every = static_cast<int>(std::round(cfg.sim.robot_hz / cfg.ring.rate_hz));
  const int lidar_every = static_cast<int>(std::round(cfg.sim.robot_hz / cfg.lidar.rate_hz));
  const double ring_period = ring_every * dt;
  const double lidar_period = lidar_every * dt;

  const auto prog = TaskProgram::build(cfg.task.posture, cfg.task.swept_joint, cfg.task.q_pick,
                                       cfg.task.q_place, cfg.task.joint_speed,
                                       cfg.task.joint_accel, cfg.task.dwell, cfg.task.items);
  const double timeout =
      spec.timeout > 0.0 ? spec.timeout : cfg.sim.timeout_factor * prog.total_time;

  HumanAvatar avatar = cfg.avatar;
  if (!spec.human_present) {
    avatar.mode = AvatarMode::absent;
  } else if (spec.replay) {
    avatar.mode = AvatarMode::replay;
    avatar.recording = *spec.replay;
  } else {
    avatar.path.phase += spec.phase;
  }

  const SsmParams params = resolve_ssm_params(cfg, spec.approach, spec.mode);
  const Lidar2DSpec lidar_spec = make_lidar_spec(cfg.lidar);
  const double sensor_period = spec.approach == Approach::real    ? ring_period
                               : spec.approach == Approach::lidar ? lidar_period
                                                                  : dt;
  const int n_channels = spec.approach == Approach::lidar ? 1 : 3;

  std::seed_seq seq{spec.seed, static_cast<std::uint64_t>(spec.trial),
                    static_cast<std::uint64_t>(spec.approach),
                    static_cast<std::uint64_t>(spec.mode)};
  std::mt19937_64 rng(seq);

  TaskState task;
  SpeedProfile ramp;
  SafetyState safety;
  std::array<RingInput, 3> inputs{};
  std::array<ChannelLog, 3> ch_log{};
  struct PrevRange {
    bool valid = false;
    double d = 0.0;
  };
  std::array<PrevRange, 3> prev_range{};

  Scene scene;
  const size_t n_static = cfg.statics.size();

  std::ofstream trace_file;
  if (!spec.trace_path.empty()) {
    trace_file.open(spec.trace_path);
    if (!trace_file) throw std::runtime_error("run_trial: cannot open " + spec.trace_path);
    trace_file << trace_header(cfg.chain.dof()) << "\n";
  }

  TrialResult result;
  auto& summary = result.summary;
  summary.approach = spec.approach;
  summary.mode = spec.mode;
  summary.trial = spec.trial;
  summary.seed = spec.seed;
  summary.human_present = spec.human_present;
  summary.min_d_gt = std::numeric_limits<double>::infinity();

  const double nan = std::numeric_limits<double>::quiet_NaN();
  RobotMode psi_prev = RobotMode::normal;

  for (long tick = 0;; ++tick) {
    const double t = tick * dt;
    const Eigen::VectorXd q = prog.q_at(task.s);
    const Eigen::VectorXd qdot = ramp.fraction * prog.qdot_at(task.s);
    const auto poses = forward_kinematics(cfg.chain, q);
    const auto rings = ring_states(cfg.chain, poses, qdot);
    const Vec3 v_tcp = tcp_velocity(cfg.chain, poses, qdot);
    const auto robot_caps = posed_capsules(cfg.chain, poses);
    const AvatarState human = advance_avatar(avatar, t);

    scene.prims.resize(n_static);
    std::copy(cfg.statics.begin(), cfg.statics.end(), scene.prims.begin());
    for (size_t i = 0; i < robot_caps.size(); ++i) {
      scene.prims.push_back({static_cast<int>(1 + i), PrimTag::robot, robot_caps[i]});
    }
    if (human.present) {
      for (size_t i = 0; i < human.capsules.size(); ++i) {
        scene.prims.push_back({static_cast<int>(2000 + i), PrimTag::dynamic, human.capsules[i]});
      }
    }

    double d_lidar_log = nan;
    if (spec.approach == Approach::real) {
      if (tick % ring_every == 0) {
        for (int i = 0; i < 3; ++i) {
          const auto sample = sample_ring(cfg.ring, scene, rings[i].pose, t, rng);
          const auto reading = process_ring(cfg.ring, scene, rings[i].pose, sample);
          summary.ring_samples += kSensorsPerRing;
          for (int jx = 0; jx < kSensorsPerRing; ++jx) {
            if (reading.mask[jx] && sample.sensors[jx].hit &&
                sample.sensors[jx].hit_tag != PrimTag::dynamic) {
              ++summary.unmasked_self_hits;
            }
          }
          RingInput in;
          in.detection = reading.detection;
          in.t_sample = t;
          in.v_l_norm = rings[i].velocity.norm();
          if (reading.detection) {
            in.p_lo_norm = reading.dist_norm;
            in.k_l = rings[i].velocity.dot(reading.u_dir);
            in.k_o = prev_range[i].valid
                         ? directed_speed_from_ring(reading.d_min, prev_range[i].d,
                                                    ring_period, params.k_omax())
                         : 0.0;
            prev_range[i] = {true, reading.d_min};
          } else {
            prev_range[i].valid = false;
          }
          inputs[i] = in;
          ch_log[i].active = true;
          ch_log[i].d_min = reading.detection ? reading.d_min : nan;
          ch_log[i].dist = reading.detection ? reading.dist_norm : nan;
          ch_log[i].k_o = in.k_o;
          ch_log[i].k_l = in.k_l;
          int bits = 0;
          for (int jx = 0; jx < kSensorsPerRing; ++jx) bits |= reading.mask[jx] << jx;
          ch_log[i].mask_bits = bits;
        }
      }
    } else if (spec.approach == Approach::ideal) {
      for (int i = 0; i < 3; ++i) {
        RingInput in;
        in.t_sample = t;
        in.v_l_norm = rings[i].velocity.norm();
        if (human.present) {
          const auto res = point_capsule_set_distance(rings[i].center, human.capsules);
          in.detection = true;
          in.p_lo_norm = res.distance;
          const Vec3 p_lo = res.direction * std::max(res.distance, 0.0);
          const auto ks = directed_speeds(rings[i].velocity, human.velocities[res.index],
                                          p_lo, params);
          in.k_o = std::clamp(ks.k_o, -params.k_omax(), params.k_omax());
          in.k_l = ks.k_l;
        }
        inputs[i] = in;
        ch_log[i].active = true;
        ch_log[i].d_min = in.detection ? in.p_lo_norm : nan;
        ch_log[i].dist = ch_log[i].d_min;
        ch_log[i].k_o = in.k_o;
        ch_log[i].k_l = in.k_l;
        ch_log[i].mask_bits = 0xFF;
      }
    } else {
      if (tick % lidar_every == 0) {
        const auto scan = scan_lidar(lidar_spec, scene, t);
        RingInput in;
        in.t_sample = t;
        in.v_l_norm = v_tcp.norm();
        if (scan.any) {
          in.detection = true;
          in.p_lo_norm = lidar_min_distance(scan.d_min, lidar_spec.r_o);
          in.k_l = v_tcp.dot(scan.u_dir);
          in.k_o = prev_range[0].valid
                       ? directed_speed_from_ring(in.p_lo_norm, prev_range[0].d, lidar_period,
                                                  params.k_omax())
                       : 0.0;
          prev_range[0] = {true, in.p_lo_norm};
        } else {
          prev_range[0].valid = false;
        }
        inputs[0] = in;
        ch_log[0].active = true;
        ch_log[0].d_min = scan.any ? scan.d_min : nan;
        ch_log[0].dist = in.detection ? in.p_lo_norm : nan;
        ch_log[0].k_o = in.k_o;
        ch_log[0].k_l = in.k_l;
        ch_log[0].mask_bits = 0xFF;
      }
      d_lidar_log = inputs[0].detection ? inputs[0].p_lo_norm : nan;
    }

    const auto step = ssm_step(t, std::span<const RingInput>(inputs.data(), n_channels),
                               params, sensor_period, safety);
    for (int i = 0; i < n_channels; ++i) {
      ch_log[i].d_c = step.rings[i].d_c;
      ch_log[i].d_r = step.rings[i].d_r;
      ch_log[i].dsi_hat = step.rings[i].dsi_hat;
      ch_log[i].psi = static_cast<int>(step.rings[i].psi);
    }

    // Oracles for the log and the metrics.
    double d_gt = nan, d_ideal = nan;
    if (human.present) {
      d_gt = min_capsule_set_distance(robot_caps, human.capsules).distance;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < 3; ++i) {
        best = std::min(best, point_capsule_set_distance(rings[i].center, human.capsules).distance);
      }
      d_ideal = best;
      summary.min_d_gt = std::min(summary.min_d_gt, d_gt);
    }

    double d_est = nan;
    int detect = 0;
    if (spec.approach == Approach::real) {
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < 3; ++i) {
        if (inputs[i].detection) best = std::min(best, inputs[i].p_lo_norm);
      }
      if (std::isfinite(best)) { d_est = best; detect = 1; }
    } else if (spec.approach == Approach::ideal) {
      if (human.present) { d_est = d_ideal; detect = 1; }
    } else {
      if (inputs[0].detection) { d_est = inputs[0].p_lo_norm; detect = 1; }
    }

    std::string events;
    auto add_event = [&events](const char* e) {
      if (!events.empty()) events += ';';
      events += e;
    };
    if (step.psi != psi_prev) {
      if (step.psi == RobotMode::stop) { add_event("stop"); ++summary.stop_events; }
      else if (step.psi == RobotMode::reduced) { add_event("reduce"); ++summary.reduce_events; }
      else add_event("resume");
    }
    psi_prev = step.psi;

    const double rho = ramp.fraction;
    ramp_fraction(ramp, speed_fraction(step.psi), dt);
    const auto task_step = step_task(prog, task, ramp.fraction, dt);
    for (const auto ev : task_step.events) {
      if (ev == TaskEvent::pick) add_event("pick");
      else if (ev == TaskEvent::place) add_event("place");
      else if (ev == TaskEvent::done) add_event("done");
    }

    TraceRow row;
    row.t = t;
    row.q.assign(q.data(), q.data() + q.size());
    row.qdot.assign(qdot.data(), qdot.data() + qdot.size());
    row.rho = rho;
    row.psi = static_cast<int>(step.psi);
    row.tcp_speed = v_tcp.norm();
    row.d_gt = d_gt;
    row.d_ideal = d_ideal;
    row.d_lidar = d_lidar_log;
    row.d_est = d_est;
    row.detect = detect;
    row.ch = ch_log;
    row.events = events;
    if (trace_file.is_open()) trace_file << format_trace_row(row) << "\n";
    if (spec.keep_rows) result.rows.push_back(row);

    if (task.done) {
      summary.completed = true;
      summary.duration = t;
      break;
    }
    if (t >= timeout) {
      summary.completed = false;
      summary.duration = t;
      break;
    }
  }
  summary.items_done = task.items_done;
  if (!std::isfinite(summary.min_d_gt)) summary.min_d_gt = nan;
  return result;
}

/// Loads a trace written by run_trial back into rows (used by the reporting
/// path so it can run on artifacts alone).
inline std::vector<TraceRow> load_trace_csv(const std::string& path, int dof) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_trace_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_trace_csv: empty file " + path);
  if (line != trace_header(dof)) {
    throw std::runtime_error("load_trace_csv: unexpected header in " + path);
  }
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TraceRow r;
    std::stringstream ss(line);
    std::string field;
    auto next = [&]() -> std::string {
      if (!std::getline(ss, field, ',')) {
        throw std::runtime_error("load_trace_csv: truncated row in " + path);
      }
      return field;
    };
    auto next_d = [&]() { return std::stod(next()); };
    auto next_i = [&]() { return std::stoi(next()); };
    r.t = next_d();
    r.q.resize(dof);
    r.qdot.resize(dof);
    for (int i = 0; i < dof; ++i) r.q[i] = next_d();
    for (int i = 0; i < dof; ++i) r.qdot[i] = next_d();
    r.rho = next_d();
    r.psi = next_i();
    r.tcp_speed = next_d();
    r.d_gt = next_d();
    r.d_ideal = next_d();
    r.d_lidar = next_d();
    r.d_est = next_d();
    r.detect = next_i();
    for (auto& c : r.ch) {
      c.active = next_i() != 0;
      c.d_min = next_d();
      c.dist = next_d();
      c.k_o = next_d();
      c.k_l = next_d();
      c.d_c = next_d();
      c.d_r = next_d();
      c.dsi_hat = next_d();
      c.psi = next_i();
      c.mask_bits = next_i();
    }
    std::getline(ss, r.events);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace tofssm
