#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "tofssm/geometry.hpp"

namespace tofssm {

enum class PrimTag : std::uint8_t { robot = 0, restricted = 1, dynamic = 2 };

struct Sphere {
  Vec3 center;
  double radius;
};

struct Capsule {
  Vec3 p0, p1;
  double radius;
};

/// Oriented box given by center, rotation and half extents.
struct Box {
  Vec3 center;
  Mat3 rot = Mat3::Identity();
  Vec3 half;
};

struct ScenePrimitive {
  int id = -1;
  PrimTag tag = PrimTag::restricted;
  std::variant<Sphere, Capsule, Box> shape;
};

/// Flat snapshot of everything ray-castable at one instant.
struct Scene {
  std::vector<ScenePrimitive> prims;
};

struct RayHit {
  double distance = 0.0;
  int id = -1;
  PrimTag tag = PrimTag::restricted;
};

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double ray_sphere(const Vec3& o, const Vec3& d, const Vec3& c, double r) {
  const Vec3 m = o - c;
  const double b = m.dot(d);
  const double cc = m.squaredNorm() - r * r;
  if (cc <= 0.0) return 0.0;  // origin inside
  if (b > 0.0) return kInf;
  const double disc = b * b - cc;
  if (disc < 0.0) return kInf;
  const double t = -b - std::sqrt(disc);
  return t >= 0.0 ? t : kInf;
}

inline double ray_capsule(const Vec3& o, const Vec3& d, const Capsule& cap) {
  const Vec3 ab = cap.p1 - cap.p0;
  const double len2 = ab.squaredNorm();
  if (len2 < 1e-18) return ray_sphere(o, d, cap.p0, cap.radius);
  if (dist_point_segment(o, cap.p0, cap.p1) <= cap.radius) return 0.0;

  // Infinite cylinder about the axis, then cap spheres.
  const Vec3 u = ab / std::sqrt(len2);
  const Vec3 w = o - cap.p0;
  const Vec3 dp = d - d.dot(u) * u;
  const Vec3 wp = w - w.dot(u) * u;
  double best = kInf;
  const double a = dp.squaredNorm();
  if (a > 1e-18) {
    const double b = dp.dot(wp);
    const double c = wp.squaredNorm() - cap.radius * cap.radius;
    const double disc = b * b - a * c;
    if (disc >= 0.0) {
      const double t = (-b - std::sqrt(disc)) / a;
      if (t >= 0.0) {
        const double axial = (w + t * d).dot(u);
        if (axial >= 0.0 && axial * axial <= len2) best = t;
      }
    }
  }
  best = std::min(best, ray_sphere(o, d, cap.p0, cap.radius));
  best = std::min(best, ray_sphere(o, d, cap.p1, cap.radius));
  return best;
}

inline double ray_box(const Vec3& o, const Vec3& d, const Box& box) {
  // Slab test in the box frame.
  const Vec3 ol = box.rot.transpose() * (o - box.center);
  const Vec3 dl = box.rot.transpose() * d;
  double t0 = 0.0, t1 = kInf;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(dl[i]) < 1e-15) {
      if (std::abs(ol[i]) > box.half[i]) return kInf;
    } else {
      double ta = (-box.half[i] - ol[i]) / dl[i];
      double tb = (box.half[i] - ol[i]) / dl[i];
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) return kInf;
    }
  }
  return t0;
}

inline double ray_prim(const Vec3& o, const Vec3& d, const ScenePrimitive& p) {
  if (const auto* s = std::get_if<Sphere>(&p.shape)) return ray_sphere(o, d, s->center, s->radius);
  if (const auto* c = std::get_if<Capsule>(&p.shape)) return ray_capsule(o, d, *c);
  return ray_box(o, d, std::get<Box>(p.shape));
}

}  // namespace detail

/// Bitmask filter over primitive tags.
struct TagFilter {
  std::uint8_t bits = 0x7;
  static TagFilter all() { return {0x7}; }
  static TagFilter only(PrimTag t) { return {static_cast<std::uint8_t>(1u << static_cast<int>(t))}; }
  static TagFilter robot_and_restricted() { return {0x3}; }
  bool accepts(PrimTag t) const { return bits & (1u << static_cast<int>(t)); }
};

/// Nearest hit along a unit-direction ray, or nullopt beyond max_range.
inline std::optional<RayHit> ray_cast(const Scene& scene, const Vec3& origin, const Vec3& dir,
                                      double max_range, TagFilter filter = TagFilter::all()) {
  if (std::abs(dir.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("ray_cast: direction must be a unit vector");
  }
  RayHit hit;
  hit.distance = detail::kInf;
  for (const auto& p : scene.prims) {
    if (!filter.accepts(p.tag)) continue;
    const double t = detail::ray_prim(origin, dir, p);
    if (t < hit.distance) {
      hit.distance = t;
      hit.id = p.id;
      hit.tag = p.tag;
    }
  }
  if (hit.distance > max_range) return std::nullopt;
  return hit;
}

struct ClosestPair {
  double distance = 0.0;  // surface-to-surface, clamped at contact
  Vec3 on_a, on_b;        // witness points on the axes
  int index_a = -1, index_b = -1;
};

/// Minimum surface distance between two capsule sets (contact clamps to zero).
inline ClosestPair min_capsule_set_distance(const std::vector<Capsule>& a,
                                            const std::vector<Capsule>& b) {
  ClosestPair best;
  best.distance = detail::kInf;
  for (size_t i = 0; i < a.size(); ++i) {
    for (size_t j = 0; j < b.size(); ++j) {
      const auto [pa, pb] = closest_points_segments(a[i].p0, a[i].p1, b[j].p0, b[j].p1);
      const double d = (pa - pb).norm() - a[i].radius - b[j].radius;
      if (d < best.distance) {
        best.distance = d;
        best.on_a = pa;
        best.on_b = pb;
        best.index_a = static_cast<int>(i);
        best.index_b = static_cast<int>(j);
      }
    }
  }
  if (best.distance < 0.0) best.distance = 0.0;
  return best;
}

/// Surface distance from a point to the nearest capsule in a set, with the
/// unit direction from the point toward that surface and the winning index.
struct PointCapsuleResult {
  double distance = detail::kInf;
  Vec3 direction = Vec3::Zero();  // unit, from point toward the surface; zero if inside
  int index = -1;
};

inline PointCapsuleResult point_capsule_set_distance(const Vec3& p,
                                                     const std::vector<Capsule>& caps) {
  PointCapsuleResult best;
  for (size_t j = 0; j < caps.size(); ++j) {
    const Vec3 axis_pt = closest_point_on_segment(p, caps[j].p0, caps[j].p1);
    const double axial = (axis_pt - p).norm();
    const double d = axial - caps[j].radius;
    if (d < best.distance) {
      best.distance = d;
      best.index = static_cast<int>(j);
      best.direction = axial > 1e-12 ? Vec3((axis_pt - p) / axial) : Vec3::Zero();
    }
  }
  if (best.distance < 0.0) best.distance = 0.0;
  return best;
}

}  // namespace tofssm
