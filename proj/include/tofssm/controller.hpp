#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "tofssm/geometry.hpp"
#include "tofssm/ssm.hpp"

namespace tofssm {

/// Scalar speed-override ramp with slew and acceleration limits. The
/// fraction scales the nominal time parametrization, so holding it at zero
/// freezes the robot exactly on its path.
struct SpeedProfile {
  double fraction = 1.0;
  double rate = 0.0;  // d(fraction)/dt
  double max_rate = 5.0;
  double max_accel = 100.0;  // rate slew limit, 1/s^2
};

inline double ramp_fraction(SpeedProfile& p, double target, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("ramp_fraction: dt must be positive");
  target = std::clamp(target, 0.0, 1.0);
  const double err = target - p.fraction;
  // Rate command limited by slew, by the no-overshoot braking envelope and
  // by what would land exactly on target this step.
  double want = 0.0;
  if (std::abs(err) > 1e-12) {
    const double brake = std::sqrt(2.0 * p.max_accel * std::abs(err));
    want = std::copysign(std::min({p.max_rate, brake, std::abs(err) / dt}), err);
  }
  const double dr = std::clamp(want - p.rate, -p.max_accel * dt, p.max_accel * dt);
  p.rate += dr;
  double next = p.fraction + p.rate * dt;
  if ((err > 0.0 && next > target) || (err < 0.0 && next < target)) {
    next = target;
    p.rate = 0.0;
  }
  p.fraction = std::clamp(next, 0.0, 1.0);
  return p.fraction;
}

/// Trapezoidal point-to-point profile in one coordinate.
struct TrapezoidProfile {
  double q0 = 0.0, q1 = 0.0;
  double v = 1.0, a = 1.0;
  double t_ramp = 0.0, t_cruise = 0.0;

  static TrapezoidProfile plan(double q0, double q1, double vmax, double accel) {
    TrapezoidProfile p;
    p.q0 = q0;
    p.q1 = q1;
    p.a = accel;
    const double dist = std::abs(q1 - q0);
    double v = vmax;
    double t_ramp = v / accel;
    if (t_ramp * v > dist) {  // triangle profile
      t_ramp = std::sqrt(dist / accel);
      v = accel * t_ramp;
      p.t_cruise = 0.0;
    } else {
      p.t_cruise = (dist - t_ramp * v) / v;
    }
    p.v = v;
    p.t_ramp = t_ramp;
    return p;
  }

  double duration() const { return 2.0 * t_ramp + t_cruise; }

  double position(double tau) const {
    const double s = std::copysign(1.0, q1 - q0);
    tau = std::clamp(tau, 0.0, duration());
    double d;
    if (tau < t_ramp) {
      d = 0.5 * a * tau * tau;
    } else if (tau < t_ramp + t_cruise) {
      d = 0.5 * a * t_ramp * t_ramp + v * (tau - t_ramp);
    } else {
      const double r = duration() - tau;
      d = std::abs(q1 - q0) - 0.5 * a * r * r;
    }
    return q0 + s * d;
  }

  double velocity(double tau) const {
    if (tau < 0.0 || tau > duration()) return 0.0;
    const double s = std::copysign(1.0, q1 - q0);
    if (tau < t_ramp) return s * a * tau;
    if (tau < t_ramp + t_cruise) return s * v;
    return s * a * (duration() - tau);
  }
};

enum class TaskEvent { none, pick, place, done };

struct TaskSegment {
  bool is_move = false;
  double duration = 0.0;
  TrapezoidProfile profile;  // for move segments, on the swept joint
  double hold_q = 0.0;       // for dwell segments
  TaskEvent end_event = TaskEvent::none;
};

/// Cyclic transfer job: dwell at the pick stand, carry a half-turn of the
/// slewing joint to the place stand, dwell, return; repeated per item.
/// Only one joint moves; the rest hold a fixed carry posture.
struct TaskProgram {
  Eigen::VectorXd posture;  // full joint vector; swept_joint entry is overridden
  int swept_joint = 0;
  int items = 10;
  std::vector<TaskSegment> segments;
  std::vector<double> seg_start;  // start path-time of each segment
  double total_time = 0.0;

  static TaskProgram build(const Eigen::VectorXd& posture, int swept_joint, double q_pick,
                           double q_place, double joint_speed, double joint_accel,
                           double dwell, int items) {
    TaskProgram prog;
    prog.posture = posture;
    prog.swept_joint = swept_joint;
    prog.items = items;
    const auto carry = TrapezoidProfile::plan(q_pick, q_place, joint_speed, joint_accel);
    const auto back = TrapezoidProfile::plan(q_place, q_pick, joint_speed, joint_accel);
    for (int i = 0; i < items; ++i) {
      prog.segments.push_back({false, dwell, {}, q_pick, TaskEvent::pick});
      prog.segments.push_back({true, carry.duration(), carry, 0.0, TaskEvent::none});
      prog.segments.push_back(
          {false, dwell, {}, q_place, i + 1 == items ? TaskEvent::done : TaskEvent::place});
      if (i + 1 < items) {
        prog.segments.push_back({true, back.duration(), back, 0.0, TaskEvent::none});
      }
    }
    double t = 0.0;
    for (const auto& seg : prog.segments) {
      prog.seg_start.push_back(t);
      t += seg.duration;
    }
    prog.total_time = t;
    return prog;
  }

  /// Joint vector at path time s (clamped to the program span).
  Eigen::VectorXd q_at(double s) const {
    Eigen::VectorXd q = posture;
    q[swept_joint] = swept_value(s).first;
    return q;
  }

  /// Nominal joint velocity at path time s.
  Eigen::VectorXd qdot_at(double s) const {
    Eigen::VectorXd qd = Eigen::VectorXd::Zero(posture.size());
    qd[swept_joint] = swept_value(s).second;
    return qd;
  }

  std::pair<double, double> swept_value(double s) const {
    s = std::clamp(s, 0.0, total_time);
    const size_t idx = segment_index(s);
    const auto& seg = segments[idx];
    const double tau = s - seg_start[idx];
    if (!seg.is_move) return {seg.hold_q, 0.0};
    return {seg.profile.position(tau), seg.profile.velocity(tau)};
  }

  size_t segment_index(double s) const {
    size_t idx = std::upper_bound(seg_start.begin(), seg_start.end(), s) - seg_start.begin();
    return idx == 0 ? 0 : std::min(idx - 1, segments.size() - 1);
  }

  /// Events whose segment boundary lies in (s0, s1].
  std::vector<TaskEvent> events_between(double s0, double s1) const {
    std::vector<TaskEvent> ev;
    for (size_t i = 0; i < segments.size(); ++i) {
      const double end = seg_start[i] + segments[i].duration;
      if (segments[i].end_event != TaskEvent::none && end > s0 && end <= s1) {
        ev.push_back(segments[i].end_event);
      }
    }
    return ev;
  }
};

struct TaskState {
  double s = 0.0;  // path time
  bool done = false;
  int items_done = 0;
};

struct TaskStepResult {
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;  // actual rate: fraction * nominal
  std::vector<TaskEvent> events;
};

/// Advance the path clock by fraction*dt and evaluate the nominal program
/// there. Joint positions are a pure function of the path time, so any
/// override history replays the identical joint-space path.
inline TaskStepResult step_task(const TaskProgram& prog, TaskState& st, double fraction,
                                double dt) {
  const double s0 = st.s;
  st.s = std::min(st.s + fraction * dt, prog.total_time);
  TaskStepResult out;
  out.q = prog.q_at(st.s);
  out.qdot = fraction * prog.qdot_at(st.s);
  out.events = prog.events_between(s0, st.s);
  for (const auto ev : out.events) {
    if (ev == TaskEvent::place || ev == TaskEvent::done) st.items_done += 1;
    if (ev == TaskEvent::done) st.done = true;
  }
  return out;
}

}  // namespace tofssm
