#include <random>

#include "catch_amalgamated.hpp"
#include "tofssm/geometry.hpp"

using namespace tofssm;

namespace {

// Independent oracle: distance from a point to a segment by golden-section
// search over the segment parameter (the profile is convex).
double golden_point_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.0, hi = 1.0;
  auto f = [&](double t) { return (a + t * (b - a) - p).norm(); };
  double c = hi - gr * (hi - lo);
  double d = lo + gr * (hi - lo);
  for (int i = 0; i < 80; ++i) {
    if (f(c) < f(d)) {
      hi = d;
    } else {
      lo = c;
    }
    c = hi - gr * (hi - lo);
    d = lo + gr * (hi - lo);
  }
  return f(0.5 * (lo + hi));
}

// Segment-segment distance by nested golden section over both parameters;
// distance is jointly convex so the partial minimum stays convex.
double golden_segment_segment(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  auto inner = [&](double s) {
    return golden_point_segment(p1 + s * (q1 - p1), p2, q2);
  };
  double lo = 0.0, hi = 1.0;
  double c = hi - gr * (hi - lo);
  double d = lo + gr * (hi - lo);
  for (int i = 0; i < 80; ++i) {
    if (inner(c) < inner(d)) {
      hi = d;
    } else {
      lo = c;
    }
    c = hi - gr * (hi - lo);
    d = lo + gr * (hi - lo);
  }
  return inner(0.5 * (lo + hi));
}

Vec3 random_vec(std::mt19937_64& rng, double extent) {
  std::uniform_real_distribution<double> u(-extent, extent);
  return {u(rng), u(rng), u(rng)};
}

}  // namespace

TEST_CASE("make_transform composes yaw-pitch-roll about fixed axes") {
  const Transform t = make_transform({1.0, 2.0, 3.0});
  CHECK(t.translation().isApprox(Vec3(1.0, 2.0, 3.0)));
  CHECK(t.linear().isApprox(Mat3::Identity()));

  // Pure yaw, quarter turn: x-axis lands on y.
  const Transform yaw = make_transform(Vec3::Zero(), {0.0, 0.0, M_PI / 2.0});
  CHECK((yaw.linear() * Vec3::UnitX()).isApprox(Vec3::UnitY(), 1e-12));

  // rpy order: R = Rz * Ry * Rx applied to a probe vector, composed by hand.
  const Vec3 rpy{0.3, -0.7, 1.1};
  const Mat3 rx = Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()).toRotationMatrix();
  const Mat3 ry = Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()).toRotationMatrix();
  const Mat3 rz = Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()).toRotationMatrix();
  CHECK(make_transform(Vec3::Zero(), rpy).linear().isApprox(rz * ry * rx, 1e-12));
}

TEST_CASE("closest point on segment clamps to the endpoints") {
  const Vec3 a{0.0, 0.0, 0.0}, b{1.0, 0.0, 0.0};
  CHECK(closest_point_on_segment({0.5, 1.0, 0.0}, a, b).isApprox(Vec3(0.5, 0.0, 0.0)));
  CHECK(closest_point_on_segment({-2.0, 0.0, 0.0}, a, b).isApprox(a));
  CHECK(closest_point_on_segment({5.0, 3.0, 0.0}, a, b).isApprox(b));
  CHECK(dist_point_segment({0.5, 2.0, 0.0}, a, b) == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("degenerate segments reduce to point distances") {
  const Vec3 p{1.0, 1.0, 1.0};
  CHECK(dist_segment_segment(p, p, {0.0, 0.0, 0.0}, {2.0, 0.0, 0.0}) ==
        Catch::Approx(std::sqrt(2.0)).margin(1e-12));
  CHECK(dist_segment_segment(p, p, p, p) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("segment-segment distance: crossing and parallel cases") {
  // Perpendicular crossing with vertical offset.
  CHECK(dist_segment_segment({-1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {0.0, -1.0, 0.5},
                             {0.0, 1.0, 0.5}) == Catch::Approx(0.5).margin(1e-12));
  // Parallel, laterally offset by 1.
  CHECK(dist_segment_segment({0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0},
                             {1.0, 1.0, 0.0}) == Catch::Approx(1.0).margin(1e-12));
  // Intersecting in the plane.
  CHECK(dist_segment_segment({-1.0, -1.0, 0.0}, {1.0, 1.0, 0.0}, {-1.0, 1.0, 0.0},
                             {1.0, -1.0, 0.0}) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("segment-segment distance matches a nested golden-section oracle") {
  std::mt19937_64 rng(42);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Vec3 p1 = random_vec(rng, 1.5), q1 = random_vec(rng, 1.5);
    const Vec3 p2 = random_vec(rng, 1.5), q2 = random_vec(rng, 1.5);
    const double closed = dist_segment_segment(p1, q1, p2, q2);
    const double sampled = golden_segment_segment(p1, q1, p2, q2);
    worst = std::max(worst, std::abs(closed - sampled));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("closest witness points realize the reported distance") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const Vec3 p1 = random_vec(rng, 2.0), q1 = random_vec(rng, 2.0);
    const Vec3 p2 = random_vec(rng, 2.0), q2 = random_vec(rng, 2.0);
    const auto [w1, w2] = closest_points_segments(p1, q1, p2, q2);
    CHECK((w1 - w2).norm() ==
          Catch::Approx(dist_segment_segment(p1, q1, p2, q2)).margin(1e-9));
    // Witnesses must lie on their segments.
    CHECK(dist_point_segment(w1, p1, q1) < 1e-9);
    CHECK(dist_point_segment(w2, p2, q2) < 1e-9);
  }
}
