#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

#include "tofssm/geometry.hpp"

namespace tofssm {

enum class SsmMode : int { vo = 0, vr = 1, sm = 2 };

/// Robot operating state; ordered so that fusion is a plain minimum.
enum class RobotMode : int { stop = 0, reduced = 1, normal = 2 };

inline double speed_fraction(RobotMode m) {
  switch (m) {
    case RobotMode::stop: return 0.0;
    case RobotMode::reduced: return 0.5;
    default: return 1.0;
  }
}

struct SsmParams {
  SsmMode mode = SsmMode::vo;
  double T_R = 0.1;      // reaction time, s
  double T_stop = 0.4;   // stopping time at full speed, s
  double T_red = 0.4;    // time to reach reduced speed, s
  double V_lmax = 1.7;   // max link speed, m/s
  double V_hmax = 1.6;   // max human approach speed, m/s
  double C_dC = 0.3;     // contact clearance, m
  double B_min = 0.2;    // minimum braking distance contribution, m
  double fixed_dC = 0.5; // static thresholds (sm mode), m
  double fixed_dR = 1.1;

  double k_omax() const { return V_lmax + V_hmax; }
  double k_lmax() const { return V_lmax; }
  /// Speed bound used in the threshold formulas for the active mode.
  double k_max() const { return mode == SsmMode::vr ? k_lmax() : k_omax(); }
};

struct DirectedSpeeds {
  double k_o = 0.0;  // relative approach speed along the separation direction
  double k_l = 0.0;  // link speed along the separation direction
};

/// Project link and obstacle velocities onto the separation direction.
/// A vanishing separation yields the worst-case speeds.
inline DirectedSpeeds directed_speeds(const Vec3& v_l, const Vec3& v_o, const Vec3& p_lo,
                                      const SsmParams& p) {
  const double n = p_lo.norm();
  if (n < 1e-12) return {p.k_omax(), p.k_lmax()};
  const Vec3 u = p_lo / n;
  return {(v_l - v_o).dot(u), v_l.dot(u)};
}

/// Distance below which a stop can no longer prevent contact.
inline double critical_distance(double k, double v_l_norm, const SsmParams& p) {
  const double kc = std::clamp(k, 0.0, p.k_max());
  return 0.5 * p.k_max() * p.T_R + 0.5 * kc * p.T_stop +
         std::max(p.B_min, 0.5 * v_l_norm * p.T_stop) + p.C_dC;
}

/// Distance below which the robot must run at reduced speed. The buffer term
/// grows when the previous cycle was already degraded, which resists chatter.
inline double reduced_distance(double k, RobotMode psi_prev, double d_c, const SsmParams& p) {
  const double kc = std::clamp(k, 0.0, p.k_max());
  const double buffer =
      (2.0 - static_cast<double>(psi_prev)) * (p.V_lmax * p.T_red / 4.0);
  return p.k_max() * p.T_R + kc * 0.75 * p.T_red + buffer + d_c;
}

struct DsiLevels {
  double dsi = 0.0;    // (C_dC / distance)^2, capped at 1
  double dsi_c = 0.0;  // stop threshold
  double dsi_r = 0.0;  // reduced threshold
};

inline DsiLevels dsi_and_thresholds(double p_lo_norm, double d_c, double d_r, double c_dc) {
  DsiLevels out;
  out.dsi = p_lo_norm <= c_dc ? 1.0 : std::min(1.0, (c_dc / p_lo_norm) * (c_dc / p_lo_norm));
  out.dsi_c = (c_dc / d_c) * (c_dc / d_c);
  out.dsi_r = (c_dc / d_r) * (c_dc / d_r);
  return out;
}

struct RingUpdate {
  RobotMode psi = RobotMode::normal;
  double dsi_filtered = 0.0;
};

/// Asymmetric low-pass on the intrusion index plus the three-way comparison.
/// Receding readings are trusted slowly, approaching ones quickly, and
/// anything past the stop threshold is taken verbatim.
inline RingUpdate update_ring_state(double dsi, double dsi_c, double dsi_r, double dsi_last) {
  double alpha;
  if (dsi < dsi_last) {
    alpha = 0.3;
  } else if (dsi >= dsi_c) {
    alpha = 1.0;
  } else {
    alpha = 0.8;
  }
  const double hat = alpha * dsi + (1.0 - alpha) * dsi_last;
  RingUpdate out;
  out.dsi_filtered = hat;
  if (hat <= dsi_r) {
    out.psi = RobotMode::normal;
  } else if (hat < dsi_c) {
    out.psi = RobotMode::reduced;
  } else {
    out.psi = RobotMode::stop;
  }
  return out;
}

inline RobotMode fuse_states(std::span<const RobotMode> states) {
  RobotMode m = RobotMode::normal;
  for (const auto s : states) m = std::min(m, s);
  return m;
}

/// Walkthrough value of the separation formula for audit logs; not used in
/// the control loop.
inline double protective_distance_reference(double v_h, double v_r, const SsmParams& p) {
  return v_h * (p.T_R + p.T_stop) + v_r * p.T_R + p.B_min + p.C_dC;
}

/// Per-sample input for one ring (or the single planar-scanner channel).
struct RingInput {
  bool detection = false;  // false = clear field of view
  double p_lo_norm = 0.0;  // center-to-obstacle distance, m
  double k_o = 0.0;
  double k_l = 0.0;
  double v_l_norm = 0.0;
  double t_sample = 0.0;
};

struct RingDiagnostics {
  bool active = false;
  RobotMode psi = RobotMode::normal;
  double d_c = 0.0;
  double d_r = 0.0;
  double dsi = 0.0;
  double dsi_hat = 0.0;
  double dsi_c = 0.0;
  double dsi_r = 0.0;
  bool stale = false;
};

struct RingChannelState {
  double dsi_last = 0.0;
  RobotMode psi = RobotMode::normal;
  double t_last_sample = -std::numeric_limits<double>::infinity();
  double t_last_processed = -std::numeric_limits<double>::infinity();
  RingDiagnostics diag;
};

struct SafetyState {
  std::array<RingChannelState, 3> rings;
  RobotMode fused = RobotMode::normal;
};

struct SsmStepResult {
  RobotMode psi = RobotMode::normal;
  std::array<RingDiagnostics, 3> rings;
};

/// One monitoring cycle. Each channel's filter advances only when it has a
/// fresh sample; a channel silent for more than two sensor periods fails safe
/// to stop. The fused state is the most restrictive channel.
inline SsmStepResult ssm_step(double t_now, std::span<const RingInput> inputs,
                              const SsmParams& params, double sensor_period,
                              SafetyState& state) {
  if (inputs.empty() || inputs.size() > 3) {
    throw std::invalid_argument("ssm_step: expected between one and three ring inputs");
  }
  const RobotMode psi_prev = state.fused;
  SsmStepResult result;
  std::array<RobotMode, 3> modes{};
  for (size_t i = 0; i < inputs.size(); ++i) {
    auto& ch = state.rings[i];
    const auto& in = inputs[i];
    if (in.t_sample > ch.t_last_processed) {
      double d_c, d_r;
      if (params.mode == SsmMode::sm) {
        d_c = params.fixed_dC;
        d_r = params.fixed_dR;
      } else {
        const double k = params.mode == SsmMode::vo ? in.k_o : in.k_l;
        d_c = critical_distance(k, in.v_l_norm, params);
        d_r = reduced_distance(k, psi_prev, d_c, params);
      }
      const double dist = in.detection ? in.p_lo_norm
                                       : std::numeric_limits<double>::infinity();
      const DsiLevels lv = dsi_and_thresholds(dist, d_c, d_r, params.C_dC);
      const RingUpdate up = update_ring_state(lv.dsi, lv.dsi_c, lv.dsi_r, ch.dsi_last);
      ch.dsi_last = up.dsi_filtered;
      ch.psi = up.psi;
      ch.t_last_sample = in.t_sample;
      ch.t_last_processed = in.t_sample;
      ch.diag = {true, up.psi, d_c, d_r, lv.dsi, up.dsi_filtered, lv.dsi_c, lv.dsi_r, false};
    }
    const bool stale = t_now - ch.t_last_sample > 2.0 * sensor_period;
    ch.diag.stale = stale;
    const RobotMode psi_i = stale ? RobotMode::stop : ch.psi;
    ch.diag.psi = psi_i;
    modes[i] = psi_i;
    result.rings[i] = ch.diag;
  }
  result.psi = fuse_states(std::span<const RobotMode>(modes.data(), inputs.size()));
  state.fused = result.psi;
  return result;
}

/// Sign convention: shrinking range means positive approach speed.
inline double directed_speed_from_ring(double d_now, double d_prev, double dt, double k_max) {
  if (dt <= 0.0) throw std::invalid_argument("directed_speed_from_ring: dt must be positive");
  return std::clamp(-(d_now - d_prev) / dt, -k_max, k_max);
}

}  // namespace tofssm
