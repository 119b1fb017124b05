#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tofssm/avatar.hpp"
#include "tofssm/controller.hpp"
#include "tofssm/kinematics.hpp"
#include "tofssm/lidar2d.hpp"
#include "tofssm/scene.hpp"
#include "tofssm/ssm.hpp"
#include "tofssm/tof_ring.hpp"

namespace tofssm {

enum class Approach : int { real = 0, ideal = 1, lidar = 2 };

inline const char* to_string(Approach a) {
  switch (a) {
    case Approach::real: return "real";
    case Approach::ideal: return "ideal";
    default: return "lidar";
  }
}

inline const char* to_string(SsmMode m) {
  switch (m) {
    case SsmMode::vo: return "Vo";
    case SsmMode::vr: return "Vr";
    default: return "SM";
  }
}

inline bool parse_approach(const std::string& s, Approach& out) {
  if (s == "real") out = Approach::real;
  else if (s == "ideal") out = Approach::ideal;
  else if (s == "lidar") out = Approach::lidar;
  else return false;
  return true;
}

inline bool parse_mode(const std::string& s, SsmMode& out) {
  if (s == "Vo" || s == "vo") out = SsmMode::vo;
  else if (s == "Vr" || s == "vr") out = SsmMode::vr;
  else if (s == "SM" || s == "sm") out = SsmMode::sm;
  else return false;
  return true;
}

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace cfg_detail {

using nlohmann::json;

inline const json& need(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(path + "." + key + ": missing required field");
  }
  return j.at(key);
}

inline double num(const json& j, const std::string& key, const std::string& path) {
  const json& v = need(j, key, path);
  if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
  return v.get<double>();
}

inline double num_or(const json& j, const std::string& key, double fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return j.at(key).get<double>();
}

inline int integer(const json& j, const std::string& key, const std::string& path) {
  const json& v = need(j, key, path);
  if (!v.is_number_integer()) throw ConfigError(path + "." + key + ": expected an integer");
  return v.get<int>();
}

inline Vec3 vec3(const json& j, const std::string& key, const std::string& path) {
  const json& v = need(j, key, path);
  if (!v.is_array() || v.size() != 3) {
    throw ConfigError(path + "." + key + ": expected an array of 3 numbers");
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

inline Vec3 vec3_or(const json& j, const std::string& key, const Vec3& fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  const json& v = j.at(key);
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

}  // namespace cfg_detail

struct LidarConfig {
  Vec3 origin{0.0, 0.0, 0.2};
  double angular_resolution_deg = 0.5;
  double range_max = 10.0;
  double rate_hz = 31.25;
  double r_o = 0.82;
};

struct TaskConfig {
  Eigen::VectorXd posture;
  int swept_joint = 0;
  double q_pick = 0.0;
  double q_place = M_PI;
  double joint_speed = 2.0;
  double joint_accel = 4.0;
  double dwell = 0.5;
  int items = 10;
};

struct SimSettings {
  double robot_hz = 125.0;
  int trials = 5;
  std::uint64_t seed = 20260815;
  double timeout_factor = 10.0;
};

struct MatrixDefaults {
  std::vector<Approach> approaches{Approach::real, Approach::ideal, Approach::lidar};
  std::vector<SsmMode> modes{SsmMode::vo, SsmMode::vr, SsmMode::sm};
};

struct Config {
  KinematicChain chain;
  ToFRingSpec ring;
  LidarConfig lidar;
  SsmParams ssm;  // mode field is a placeholder until resolved per cell
  std::vector<ScenePrimitive> statics;
  HumanAvatar avatar;
  TaskConfig task;
  SimSettings sim;
  MatrixDefaults matrix;
};

/// Threshold parameter set for one (approach, mode) cell. The planar scanner
/// cannot resolve which workspace point is approached, so its clearance and
/// static thresholds grow by the workspace radius.
inline SsmParams resolve_ssm_params(const Config& cfg, Approach approach, SsmMode mode) {
  SsmParams p = cfg.ssm;
  p.mode = mode;
  if (approach == Approach::lidar) {
    p.C_dC += cfg.lidar.r_o;
    p.fixed_dC += cfg.lidar.r_o;
    p.fixed_dR += cfg.lidar.r_o;
  }
  return p;
}

inline Lidar2DSpec make_lidar_spec(const LidarConfig& c) {
  Lidar2DSpec spec;
  spec.pose = make_transform(c.origin);
  spec.angular_resolution = c.angular_resolution_deg * M_PI / 180.0;
  spec.range_max = c.range_max;
  spec.rate_hz = c.rate_hz;
  spec.r_o = c.r_o;
  return spec;
}

inline Config parse_config(const nlohmann::json& j) {
  using namespace cfg_detail;
  Config cfg;

  const json& chain = need(j, "chain", "config");
  const json& joints = need(chain, "joints", "config.chain");
  if (!joints.is_array() || joints.empty()) {
    throw ConfigError("config.chain.joints: expected a non-empty array");
  }
  for (size_t i = 0; i < joints.size(); ++i) {
    const std::string path = "config.chain.joints[" + std::to_string(i) + "]";
    RevoluteJoint rj;
    rj.parent_to_joint =
        make_transform(vec3(joints[i], "xyz", path), vec3_or(joints[i], "rpy", Vec3::Zero()));
    rj.axis = vec3(joints[i], "axis", path);
    cfg.chain.joints.push_back(rj);
  }
  cfg.chain.tcp_offset = make_transform(vec3(chain, "tcp_xyz", "config.chain"));
  const json& caps = need(chain, "capsules", "config.chain");
  for (size_t i = 0; i < caps.size(); ++i) {
    const std::string path = "config.chain.capsules[" + std::to_string(i) + "]";
    LinkCapsule lc;
    lc.link = integer(caps[i], "link", path);
    lc.p0 = vec3(caps[i], "p0", path);
    lc.p1 = vec3(caps[i], "p1", path);
    lc.radius = num(caps[i], "radius", path);
    cfg.chain.capsules.push_back(lc);
  }
  const json& mounts = need(chain, "ring_mounts", "config.chain");
  const std::array<std::pair<const char*, RingSite>, 3> sites{
      {{"base", RingSite::base}, {"elbow", RingSite::elbow}, {"tool", RingSite::tool}}};
  for (const auto& [name, site] : sites) {
    const std::string path = std::string("config.chain.ring_mounts.") + name;
    const json& m = need(mounts, name, "config.chain.ring_mounts");
    RingMount rm;
    rm.site = site;
    rm.link = integer(m, "link", path);
    rm.link_to_ring = make_transform(vec3(m, "xyz", path), vec3_or(m, "rpy", Vec3::Zero()));
    cfg.chain.ring_mounts[static_cast<int>(site)] = rm;
  }

  const json& rings = need(j, "rings", "config");
  cfg.ring.ring_radius = num(rings, "ring_radius", "config.rings");
  cfg.ring.fov_half_angle = num(rings, "fov_half_angle_deg", "config.rings") * M_PI / 180.0;
  cfg.ring.range_min = num(rings, "range_min", "config.rings");
  cfg.ring.range_max = num(rings, "range_max", "config.rings");
  cfg.ring.sigma = num(rings, "sigma", "config.rings");
  cfg.ring.rate_hz = num(rings, "rate_hz", "config.rings");
  cfg.ring.cone_rays = integer(rings, "cone_rays", "config.rings");

  const json& lidar = need(j, "lidar", "config");
  cfg.lidar.origin = vec3(lidar, "origin", "config.lidar");
  cfg.lidar.angular_resolution_deg = num(lidar, "angular_resolution_deg", "config.lidar");
  cfg.lidar.range_max = num(lidar, "range_max", "config.lidar");
  cfg.lidar.rate_hz = num(lidar, "rate_hz", "config.lidar");
  cfg.lidar.r_o = num(lidar, "r_o", "config.lidar");

  const json& ssm = need(j, "ssm", "config");
  cfg.ssm.T_R = num(ssm, "T_R", "config.ssm");
  cfg.ssm.T_stop = num(ssm, "T_stop", "config.ssm");
  cfg.ssm.T_red = num(ssm, "T_red", "config.ssm");
  cfg.ssm.V_lmax = num(ssm, "V_lmax", "config.ssm");
  cfg.ssm.V_hmax = num(ssm, "V_hmax", "config.ssm");
  cfg.ssm.C_dC = num(ssm, "C_dC", "config.ssm");
  cfg.ssm.B_min = num(ssm, "B_min", "config.ssm");
  cfg.ssm.fixed_dC = num(ssm, "fixed_dC", "config.ssm");
  cfg.ssm.fixed_dR = num(ssm, "fixed_dR", "config.ssm");

  const json& statics = need(j, "scene", "config");
  const json& prims = need(statics, "statics", "config.scene");
  for (size_t i = 0; i < prims.size(); ++i) {
    const std::string path = "config.scene.statics[" + std::to_string(i) + "]";
    const json& p = prims[i];
    ScenePrimitive sp;
    sp.id = 1000 + static_cast<int>(i);
    sp.tag = PrimTag::restricted;
    const std::string type = need(p, "type", path).get<std::string>();
    if (type == "capsule") {
      sp.shape = Capsule{vec3(p, "p0", path), vec3(p, "p1", path), num(p, "radius", path)};
    } else if (type == "sphere") {
      sp.shape = Sphere{vec3(p, "center", path), num(p, "radius", path)};
    } else if (type == "box") {
      Box b;
      b.center = vec3(p, "center", path);
      b.half = vec3(p, "half", path);
      b.rot = make_transform(Vec3::Zero(), vec3_or(p, "rpy", Vec3::Zero())).linear();
      sp.shape = b;
    } else {
      throw ConfigError(path + ".type: unknown primitive type '" + type + "'");
    }
    cfg.statics.push_back(sp);
  }

  const json& avatar = need(j, "avatar", "config");
  const json& acaps = need(avatar, "capsules", "config.avatar");
  for (size_t i = 0; i < acaps.size(); ++i) {
    const std::string path = "config.avatar.capsules[" + std::to_string(i) + "]";
    AvatarCapsuleSpec ac;
    ac.name = acaps[i].contains("name") ? acaps[i]["name"].get<std::string>()
                                        : "cap" + std::to_string(i);
    ac.p0 = vec3(acaps[i], "p0", path);
    ac.p1 = vec3(acaps[i], "p1", path);
    ac.radius = num(acaps[i], "radius", path);
    cfg.avatar.capsules.push_back(ac);
  }
  const json& path_j = need(avatar, "path", "config.avatar");
  cfg.avatar.path.center = Eigen::Vector2d(num(path_j, "center_x", "config.avatar.path"),
                                           num(path_j, "center_y", "config.avatar.path"));
  cfg.avatar.path.scale = num(path_j, "scale", "config.avatar.path");
  cfg.avatar.path.period = num(path_j, "period", "config.avatar.path");
  cfg.avatar.path.phase = num_or(path_j, "phase", 0.0);
  cfg.avatar.path.z = num_or(path_j, "z", 0.0);
  cfg.avatar.mode = AvatarMode::parametric;

  const json& task = need(j, "task", "config");
  const json& posture = need(task, "posture", "config.task");
  if (!posture.is_array() || posture.size() != cfg.chain.joints.size()) {
    throw ConfigError("config.task.posture: expected one entry per joint");
  }
  cfg.task.posture = Eigen::VectorXd(posture.size());
  for (size_t i = 0; i < posture.size(); ++i) cfg.task.posture[static_cast<int>(i)] = posture[i].get<double>();
  cfg.task.swept_joint = integer(task, "swept_joint", "config.task");
  cfg.task.q_pick = num(task, "q_pick", "config.task");
  cfg.task.q_place = num(task, "q_place", "config.task");
  cfg.task.joint_speed = num(task, "joint_speed", "config.task");
  cfg.task.joint_accel = num(task, "joint_accel", "config.task");
  cfg.task.dwell = num(task, "dwell", "config.task");
  cfg.task.items = integer(task, "items", "config.task");

  const json& sim = need(j, "sim", "config");
  cfg.sim.robot_hz = num(sim, "robot_hz", "config.sim");
  cfg.sim.trials = integer(sim, "trials", "config.sim");
  cfg.sim.seed = need(sim, "seed", "config.sim").get<std::uint64_t>();
  cfg.sim.timeout_factor = num(sim, "timeout_factor", "config.sim");

  return cfg;
}

inline Config load_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("config: cannot open " + file);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config: JSON parse failure in " + file + ": " + e.what());
  }
  return parse_config(j);
}

/// Whether `period` is an integer multiple of the base step (within 1 ppm).
inline bool divides_base_step(double rate_hz, double base_hz) {
  const double n = base_hz / rate_hz;
  return std::abs(n - std::round(n)) < 1e-6 * std::max(1.0, n) && n >= 1.0 - 1e-9;
}

/// Semantic checks over a parsed config. Returns human-readable diagnostics;
/// an empty list means the config is runnable.
inline std::vector<std::string> validate_config(const Config& cfg) {
  std::vector<std::string> diags;
  auto add = [&](const std::string& s) { diags.push_back(s); };

  for (size_t i = 0; i < cfg.chain.joints.size(); ++i) {
    if (std::abs(cfg.chain.joints[i].axis.norm() - 1.0) > 1e-9) {
      add("chain.joints[" + std::to_string(i) + "].axis: must be a unit vector");
    }
  }
  for (size_t i = 0; i < cfg.chain.capsules.size(); ++i) {
    const auto& c = cfg.chain.capsules[i];
    if (c.radius <= 0.0) add("chain.capsules[" + std::to_string(i) + "].radius: must be > 0");
    if (c.link < 0 || c.link >= cfg.chain.dof()) {
      add("chain.capsules[" + std::to_string(i) + "].link: out of range");
    }
  }
  for (const auto& m : cfg.chain.ring_mounts) {
    if (m.link < 0 || m.link >= cfg.chain.dof()) {
      add("chain.ring_mounts: link index out of range");
    }
  }

  if (cfg.ring.ring_radius <= 0.0) add("rings.ring_radius: must be > 0");
  if (!(cfg.ring.range_min > 0.0 && cfg.ring.range_min < cfg.ring.range_max)) {
    add("rings.range_min/range_max: need 0 < range_min < range_max");
  }
  if (cfg.ring.sigma < 0.0) add("rings.sigma: must be >= 0");
  if (cfg.ring.cone_rays < 1) add("rings.cone_rays: must be >= 1");
  if (cfg.ring.fov_half_angle <= 0.0 || cfg.ring.fov_half_angle >= M_PI / 2.0) {
    add("rings.fov_half_angle_deg: must be in (0, 90)");
  }

  if (cfg.lidar.r_o <= 0.0) add("lidar.r_o: must be > 0");
  if (cfg.lidar.angular_resolution_deg <= 0.0) add("lidar.angular_resolution_deg: must be > 0");

  const auto& s = cfg.ssm;
  for (const auto& [v, name] : std::initializer_list<std::pair<double, const char*>>{
           {s.T_R, "ssm.T_R"}, {s.T_stop, "ssm.T_stop"}, {s.T_red, "ssm.T_red"},
           {s.V_lmax, "ssm.V_lmax"}, {s.V_hmax, "ssm.V_hmax"}, {s.C_dC, "ssm.C_dC"},
           {s.B_min, "ssm.B_min"}}) {
    if (v <= 0.0) add(std::string(name) + ": must be > 0");
  }
  if (s.fixed_dR <= s.fixed_dC) {
    add("ssm.fixed_dR: must exceed ssm.fixed_dC (reduced band would be empty)");
  }
  if (s.fixed_dC <= s.C_dC) add("ssm.fixed_dC: must exceed ssm.C_dC");

  if (cfg.sim.robot_hz <= 0.0) add("sim.robot_hz: must be > 0");
  if (cfg.sim.trials < 1) add("sim.trials: must be >= 1");
  if (cfg.sim.timeout_factor <= 1.0) add("sim.timeout_factor: must be > 1");
  if (!divides_base_step(cfg.ring.rate_hz, cfg.sim.robot_hz)) {
    add("rings.rate_hz: ring period must be an integer multiple of the base step (robot_hz/" +
        std::to_string(cfg.ring.rate_hz) + " is not an integer)");
  }
  if (!divides_base_step(cfg.lidar.rate_hz, cfg.sim.robot_hz)) {
    add("lidar.rate_hz: scan period must be an integer multiple of the base step");
  }
  if (cfg.ring.rate_hz > cfg.sim.robot_hz) add("rings.rate_hz: cannot exceed sim.robot_hz");

  if (cfg.avatar.capsules.empty()) add("avatar.capsules: need at least one capsule");
  for (size_t i = 0; i < cfg.avatar.capsules.size(); ++i) {
    if (cfg.avatar.capsules[i].radius <= 0.0) {
      add("avatar.capsules[" + std::to_string(i) + "].radius: must be > 0");
    }
  }
  if (cfg.avatar.path.period <= 0.0) add("avatar.path.period: must be > 0");
  if (cfg.avatar.path.scale <= 0.0) add("avatar.path.scale: must be > 0");
  // Peak walking speed is scale * 2*pi/period (the parametrization's maximum
  // derivative is 1); keep it within the assumed human speed bound.
  if (cfg.avatar.path.scale * 2.0 * M_PI / cfg.avatar.path.period > cfg.ssm.V_hmax + 1e-9) {
    add("avatar.path: peak speed scale*2*pi/period exceeds ssm.V_hmax");
  }

  if (cfg.task.items < 1) add("task.items: must be >= 1");
  if (cfg.task.dwell <= 0.0) add("task.dwell: must be > 0");
  if (cfg.task.joint_speed <= 0.0 || cfg.task.joint_accel <= 0.0) {
    add("task.joint_speed/joint_accel: must be > 0");
  }
  if (cfg.task.swept_joint < 0 || cfg.task.swept_joint >= cfg.chain.dof()) {
    add("task.swept_joint: out of range");
  } else if (diags.empty()) {
    // Nominal peak TCP speed must respect the assumed link speed bound.
    const auto prog =
        TaskProgram::build(cfg.task.posture, cfg.task.swept_joint, cfg.task.q_pick,
                           cfg.task.q_place, cfg.task.joint_speed, cfg.task.joint_accel,
                           cfg.task.dwell, 1);
    double peak = 0.0;
    for (int i = 0; i <= 400; ++i) {
      const double t = prog.total_time * i / 400.0;
      const auto poses = forward_kinematics(cfg.chain, prog.q_at(t));
      peak = std::max(peak, tcp_velocity(cfg.chain, poses, prog.qdot_at(t)).norm());
    }
    if (peak > cfg.ssm.V_lmax + 1e-9) {
      add("task: nominal peak TCP speed " + std::to_string(peak) +
          " m/s exceeds ssm.V_lmax");
    }
  }

  return diags;
}

}  // namespace tofssm
