#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tofssm/geometry.hpp"
#include "tofssm/scene.hpp"

namespace tofssm {

/// One body capsule in the avatar's local frame (origin on the floor).
struct AvatarCapsuleSpec {
  std::string name;
  Vec3 p0, p1;
  double radius = 0.0;
};

/// Planar figure-eight: p(t) = c + s * (cos th, sin th cos th) / (1 + sin^2 th),
/// th = 2*pi*(t + phase)/T. Crosses itself at c; lobes extend to c +- (s, 0).
struct FigureEightPath {
  Eigen::Vector2d center{0.0, 0.0};
  double scale = 1.0;
  double period = 10.0;
  double phase = 0.0;
  double z = 0.0;
};

inline Vec3 figure_eight_position(const FigureEightPath& p, double t) {
  const double th = 2.0 * M_PI * (t + p.phase) / p.period;
  const double u = std::sin(th), v = std::cos(th);
  const double den = 1.0 + u * u;
  return {p.center.x() + p.scale * v / den, p.center.y() + p.scale * u * v / den, p.z};
}

inline Vec3 figure_eight_velocity(const FigureEightPath& p, double t) {
  const double th = 2.0 * M_PI * (t + p.phase) / p.period;
  const double u = std::sin(th);
  const double den = 1.0 + u * u;
  const double den2 = den * den;
  const double dxdth = -u * (3.0 - u * u) / den2;
  const double dydth = (1.0 - 3.0 * u * u) / den2;
  const double w = 2.0 * M_PI / p.period;
  return {p.scale * w * dxdth, p.scale * w * dydth, 0.0};
}

/// Recorded capsule-root tracks: column layout (t, x, y, z per capsule).
struct TrajectoryRecording {
  int capsule_count = 0;
  std::vector<double> t;
  std::vector<std::vector<Vec3>> roots;  // [sample][capsule]
};

enum class AvatarMode { parametric, replay, absent };

struct HumanAvatar {
  AvatarMode mode = AvatarMode::parametric;
  std::vector<AvatarCapsuleSpec> capsules;
  FigureEightPath path;
  TrajectoryRecording recording;
};

struct AvatarState {
  bool present = false;
  std::vector<Capsule> capsules;
  std::vector<Vec3> velocities;  // per capsule
};

/// Pose at time t. Parametric mode translates the whole capsule set along the
/// path; replay interpolates each recorded root linearly and clamps with zero
/// velocity outside the recording.
inline AvatarState advance_avatar(const HumanAvatar& avatar, double t) {
  AvatarState out;
  if (avatar.mode == AvatarMode::absent) return out;
  out.present = true;
  out.capsules.reserve(avatar.capsules.size());
  out.velocities.reserve(avatar.capsules.size());

  if (avatar.mode == AvatarMode::parametric) {
    const Vec3 origin = figure_eight_position(avatar.path, t);
    const Vec3 vel = figure_eight_velocity(avatar.path, t);
    for (const auto& c : avatar.capsules) {
      out.capsules.push_back({origin + c.p0, origin + c.p1, c.radius});
      out.velocities.push_back(vel);
    }
    return out;
  }

  const auto& rec = avatar.recording;
  if (rec.t.empty() || rec.capsule_count != static_cast<int>(avatar.capsules.size())) {
    throw std::runtime_error("advance_avatar: replay requested without a matching recording");
  }
  size_t hi = std::lower_bound(rec.t.begin(), rec.t.end(), t) - rec.t.begin();
  for (int c = 0; c < rec.capsule_count; ++c) {
    Vec3 root, vel = Vec3::Zero();
    if (hi == 0) {
      root = rec.roots.front()[c];
    } else if (hi >= rec.t.size()) {
      root = rec.roots.back()[c];
    } else {
      const double t0 = rec.t[hi - 1], t1 = rec.t[hi];
      const double a = (t - t0) / (t1 - t0);
      root = (1.0 - a) * rec.roots[hi - 1][c] + a * rec.roots[hi][c];
      vel = (rec.roots[hi][c] - rec.roots[hi - 1][c]) / (t1 - t0);
    }
    const Vec3 offset = avatar.capsules[c].p1 - avatar.capsules[c].p0;
    out.capsules.push_back({root, root + offset, avatar.capsules[c].radius});
    out.velocities.push_back(vel);
  }
  return out;
}

/// Record capsule roots (world p0) at a fixed rate over [0, duration].
inline TrajectoryRecording record_trajectory(const HumanAvatar& avatar, double rate_hz,
                                             double duration) {
  TrajectoryRecording rec;
  rec.capsule_count = static_cast<int>(avatar.capsules.size());
  const double dt = 1.0 / rate_hz;
  const int n = static_cast<int>(std::floor(duration / dt)) + 1;
  rec.t.reserve(n);
  rec.roots.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double t = i * dt;
    const AvatarState s = advance_avatar(avatar, t);
    std::vector<Vec3> row;
    row.reserve(s.capsules.size());
    for (const auto& c : s.capsules) row.push_back(c.p0);
    rec.t.push_back(t);
    rec.roots.push_back(std::move(row));
  }
  return rec;
}

inline void write_trajectory_csv(const TrajectoryRecording& rec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
  out << "t";
  for (int c = 0; c < rec.capsule_count; ++c) {
    out << ",cap" << c << "_x,cap" << c << "_y,cap" << c << "_z";
  }
  out << "\n";
  char buf[64];
  for (size_t i = 0; i < rec.t.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.9g", rec.t[i]);
    out << buf;
    for (const auto& r : rec.roots[i]) {
      for (int k = 0; k < 3; ++k) {
        std::snprintf(buf, sizeof(buf), ",%.9g", r[k]);
        out << buf;
      }
    }
    out << "\n";
  }
}

inline TrajectoryRecording load_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_trajectory_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_trajectory_csv: empty file " + path);
  const int cols = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
  if (cols < 4 || (cols - 1) % 3 != 0) {
    throw std::runtime_error("load_trajectory_csv: header must be t plus x,y,z triples");
  }
  TrajectoryRecording rec;
  rec.capsule_count = (cols - 1) / 3;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> vals;
    while (std::getline(ss, field, ',')) {
      try {
        vals.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw std::runtime_error("load_trajectory_csv: bad number at line " +
                                 std::to_string(line_no));
      }
    }
    if (static_cast<int>(vals.size()) != cols) {
      throw std::runtime_error("load_trajectory_csv: truncated row at line " +
                               std::to_string(line_no));
    }
    if (!rec.t.empty() && vals[0] <= rec.t.back()) {
      throw std::runtime_error("load_trajectory_csv: non-monotone time at line " +
                               std::to_string(line_no));
    }
    rec.t.push_back(vals[0]);
    std::vector<Vec3> row(rec.capsule_count);
    for (int c = 0; c < rec.capsule_count; ++c) {
      row[c] = Vec3(vals[1 + 3 * c], vals[2 + 3 * c], vals[3 + 3 * c]);
    }
    rec.roots.push_back(std::move(row));
  }
  if (rec.t.empty()) throw std::runtime_error("load_trajectory_csv: no samples in " + path);
  return rec;
}

}  // namespace tofssm
