#pragma once

#include <cmath>
#include <vector>

#include "tofssm/geometry.hpp"
#include "tofssm/scene.hpp"

namespace tofssm {

/// Planar scanner fixed to the cell, fanning rays in its own xy plane.
/// It only registers bodies flagged dynamic; the robot and mapped furniture
/// are filtered out as in a background-subtracted occupancy scan.
struct Lidar2DSpec {
  Transform pose = Transform::Identity();  // scan plane = pose xy plane
  double angular_resolution = 0.5 * M_PI / 180.0;
  double range_max = 10.0;
  double rate_hz = 31.25;
  double r_o = 0.82;  // workspace radius subtracted from raw ranges
};

struct LidarReturn {
  double angle = 0.0;
  double range = 0.0;
  int id = -1;
};

struct LidarScan {
  double t = 0.0;
  std::vector<LidarReturn> returns;
  bool any = false;
  double d_min = 0.0;
  double bearing = 0.0;        // angle of the nearest return
  Vec3 u_dir = Vec3::Zero();   // world direction of the nearest return
};

inline LidarScan scan_lidar(const Lidar2DSpec& spec, const Scene& scene, double t) {
  LidarScan out;
  out.t = t;
  const Vec3 origin = spec.pose.translation();
  const int n = static_cast<int>(std::round(2.0 * M_PI / spec.angular_resolution));
  double best = spec.range_max;
  for (int i = 0; i < n; ++i) {
    const double a = i * spec.angular_resolution;
    const Vec3 dir = spec.pose.linear() * Vec3(std::cos(a), std::sin(a), 0.0);
    const auto hit = ray_cast(scene, origin, dir, spec.range_max,
                              TagFilter::only(PrimTag::dynamic));
    if (!hit) continue;
    out.returns.push_back({a, hit->distance, hit->id});
    if (hit->distance < best) {
      best = hit->distance;
      out.any = true;
      out.d_min = hit->distance;
      out.bearing = a;
      out.u_dir = dir;
    }
  }
  return out;
}

/// Separation estimate from a raw planar range: outside the workspace disc
/// the disc radius is subtracted; at or inside it the raw range stands.
inline double lidar_min_distance(double d_lidar, double r_o) {
  return d_lidar > r_o ? d_lidar - r_o : d_lidar;
}

}  // namespace tofssm
