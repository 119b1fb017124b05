#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include "tofssm/geometry.hpp"
#include "tofssm/scene.hpp"

namespace tofssm {

inline constexpr int kSensorsPerRing = 8;

struct ToFRingSpec {
  double ring_radius = 0.045;       // sensor standoff from the ring center, m
  double fov_half_angle = 12.5 * M_PI / 180.0;
  double range_min = 0.03;
  double range_max = 1.31;
  double sigma = 0.005;             // range noise std deviation, m
  double rate_hz = 125.0 / 3.0;
  int cone_rays = 8;                // perimeter rays around the center ray
};

/// Local frame of sensor j: origin on the ring at radius ring_radius,
/// x-axis pointing radially outward. Sensors are evenly spaced.
inline Transform sensor_transform(const ToFRingSpec& spec, int j) {
  const double phi = 2.0 * M_PI * j / kSensorsPerRing;
  Transform t = Transform::Identity();
  t.linear() = Eigen::AngleAxisd(phi, Vec3::UnitZ()).toRotationMatrix();
  t.translation() = t.linear() * Vec3(spec.ring_radius, 0.0, 0.0);
  return t;
}

struct SensorSample {
  double raw = 0.0;          // reported range after noise and clamping
  bool hit = false;          // true if some surface was inside the range window
  int hit_id = -1;
  PrimTag hit_tag = PrimTag::restricted;
  double true_distance = 0.0;  // noise-free distance of the winning ray
  Vec3 origin = Vec3::Zero();  // winning ray, world frame
  Vec3 dir = Vec3::Zero();
};

struct RawRingSample {
  double t = 0.0;
  std::array<SensorSample, kSensorsPerRing> sensors;
};

/// Cast the field-of-view cone of every sensor (one center ray plus
/// `cone_rays` rays on the cone boundary) and keep the nearest return per
/// sensor. Noise is zero-mean Gaussian truncated at three sigma, so a
/// reading never strays outside the self-occlusion window of its surface.
inline RawRingSample sample_ring(const ToFRingSpec& spec, const Scene& scene,
                                 const Transform& ring_pose, double t, std::mt19937_64& rng) {
  RawRingSample out;
  out.t = t;
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int j = 0; j < kSensorsPerRing; ++j) {
    const Transform st = ring_pose * sensor_transform(spec, j);
    const Vec3 origin = st.translation();
    SensorSample s;
    s.origin = origin;
    s.dir = st.linear().col(0);
    s.true_distance = spec.range_max;
    for (int r = 0; r <= spec.cone_rays; ++r) {
      Vec3 dir_local(1.0, 0.0, 0.0);
      if (r > 0) {
        const double az = 2.0 * M_PI * (r - 1) / spec.cone_rays;
        dir_local = Vec3(std::cos(spec.fov_half_angle),
                         std::sin(spec.fov_half_angle) * std::cos(az),
                         std::sin(spec.fov_half_angle) * std::sin(az));
      }
      const Vec3 dir = st.linear() * dir_local;
      const auto hit = ray_cast(scene, origin, dir, spec.range_max);
      if (hit && hit->distance < s.true_distance) {
        s.true_distance = hit->distance;
        s.hit = true;
        s.hit_id = hit->id;
        s.hit_tag = hit->tag;
        s.dir = dir;
      }
    }
    double n = noise(rng) * spec.sigma;
    n = std::clamp(n, -3.0 * spec.sigma, 3.0 * spec.sigma);
    s.raw = std::clamp(s.hit ? s.true_distance + n : spec.range_max, spec.range_min,
                       spec.range_max);
    out.sensors[j] = s;
  }
  return out;
}

struct RingReading {
  double t = 0.0;
  std::array<double, kSensorsPerRing> raw{};
  std::array<std::uint8_t, kSensorsPerRing> mask{};  // 1 = keep, 0 = self-reading
  bool detection = false;
  double d_min = 0.0;       // nearest unmasked range from the ring surface
  int winner = -1;
  double dist_norm = 0.0;   // ring_radius + d_min when detecting
  Vec3 d_vec = Vec3::Zero();  // center-to-obstacle vector, world frame
  Vec3 u_dir = Vec3::Zero();  // unit direction of the winning sensor ray
};

/// Drop readings explained by the robot's own body or by mapped static
/// furniture: a reading is masked when its winning ray, re-cast against only
/// those objects, lands within the noise window of the reported range.
/// Dynamic hits always pass.
inline void self_occlusion_mask(const ToFRingSpec& spec, const Scene& scene,
                                const RawRingSample& sample, RingReading& reading) {
  const double window = 3.0 * spec.sigma + 1e-6;
  for (int j = 0; j < kSensorsPerRing; ++j) {
    const auto& s = sample.sensors[j];
    reading.raw[j] = s.raw;
    reading.mask[j] = 1;
    if (!s.hit || s.hit_tag == PrimTag::dynamic) continue;
    const auto recast = ray_cast(scene, s.origin, s.dir, detail::kInf,
                                 TagFilter::robot_and_restricted());
    if (recast && std::abs(s.raw - recast->distance) <= window) {
      reading.mask[j] = 0;
    }
  }
}

/// Minimum over unmasked sensors; ties resolve to the lowest sensor index.
/// With no unmasked return the reading is a clear sentinel at range_max.
inline void ring_min_distance(const ToFRingSpec& spec, const Transform& ring_pose,
                              const RawRingSample& sample, RingReading& reading) {
  reading.t = sample.t;
  reading.d_min = spec.range_max;
  reading.winner = -1;
  reading.detection = false;
  for (int j = 0; j < kSensorsPerRing; ++j) {
    if (!reading.mask[j] || !sample.sensors[j].hit) continue;
    if (reading.raw[j] < reading.d_min - 1e-12) {
      reading.d_min = reading.raw[j];
      reading.winner = j;
    }
  }
  if (reading.winner >= 0) {
    reading.detection = true;
    reading.dist_norm = spec.ring_radius + reading.d_min;
    const Transform st = ring_pose * sensor_transform(spec, reading.winner);
    reading.u_dir = st.linear().col(0);
    reading.d_vec = reading.u_dir * reading.dist_norm;
  } else {
    reading.dist_norm = spec.ring_radius + spec.range_max;
    reading.u_dir = Vec3::Zero();
    reading.d_vec = Vec3::Zero();
  }
}

inline RingReading process_ring(const ToFRingSpec& spec, const Scene& scene,
                                const Transform& ring_pose, const RawRingSample& sample) {
  RingReading reading;
  self_occlusion_mask(spec, scene, sample, reading);
  ring_min_distance(spec, ring_pose, sample, reading);
  return reading;
}

}  // namespace tofssm
