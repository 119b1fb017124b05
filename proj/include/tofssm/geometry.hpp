#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <utility>

namespace tofssm {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Transform = Eigen::Isometry3d;

inline Transform make_transform(const Vec3& xyz, const Vec3& rpy = Vec3::Zero()) {
  Transform t = Transform::Identity();
  t.translation() = xyz;
  t.linear() = (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) *
                Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
                Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
                   .toRotationMatrix();
  return t;
}

/// Closest point on segment [a,b] to p.
inline Vec3 closest_point_on_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 < 1e-18) return a;
  const double s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return a + s * ab;
}

inline double dist_point_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  return (p - closest_point_on_segment(p, a, b)).norm();
}

/// Closest points between segments [p1,q1] and [p2,q2].
/// Returns {point on first, point on second}.
inline std::pair<Vec3, Vec3> closest_points_segments(const Vec3& p1, const Vec3& q1,
                                                     const Vec3& p2, const Vec3& q2) {
  const Vec3 d1 = q1 - p1;
  const Vec3 d2 = q2 - p2;
  const Vec3 r = p1 - p2;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  constexpr double kEps = 1e-18;

  double s = 0.0, t = 0.0;
  if (a <= kEps && e <= kEps) {
    return {p1, p2};
  }
  if (a <= kEps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= kEps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      if (denom > kEps) {
        s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
      }
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return {p1 + s * d1, p2 + t * d2};
}

inline double dist_segment_segment(const Vec3& p1, const Vec3& q1, const Vec3& p2,
                                   const Vec3& q2) {
  const auto [c1, c2] = closest_points_segments(p1, q1, p2, q2);
  return (c1 - c2).norm();
}

}  // namespace tofssm
