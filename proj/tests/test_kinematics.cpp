#include <random>

#include "catch_amalgamated.hpp"
#include "tofssm/kinematics.hpp"

using namespace tofssm;

namespace {

KinematicChain single_z_joint() {
  KinematicChain c;
  c.joints.push_back({Transform::Identity(), Vec3::UnitZ()});
  c.tcp_offset = Transform(Eigen::Translation3d(1.0, 0.0, 0.0));
  c.ring_mounts[0] = {RingSite::base, 0, Transform::Identity()};
  c.ring_mounts[1] = {RingSite::elbow, 0, Transform::Identity()};
  c.ring_mounts[2] = {RingSite::tool, 0, Transform::Identity()};
  return c;
}

// Six-revolute arm: vertical base column, shoulder pitch, then a straight
// chain of pitch/roll wrist joints along +x.
KinematicChain arm6() {
  KinematicChain c;
  auto t = [](double x, double y, double z) {
    return Transform(Eigen::Translation3d(x, y, z));
  };
  c.joints.push_back({t(0.0, 0.0, 0.60), Vec3::UnitZ()});
  c.joints.push_back({t(0.0, 0.0, 0.45), Vec3::UnitY()});
  c.joints.push_back({t(0.45, 0.0, 0.0), Vec3::UnitY()});
  c.joints.push_back({t(0.40, 0.0, 0.0), Vec3::UnitY()});
  c.joints.push_back({t(0.10, 0.0, 0.0), Vec3::UnitZ()});
  c.joints.push_back({t(0.06, 0.0, 0.0), Vec3::UnitX()});
  c.tcp_offset = t(0.06, 0.0, 0.0);
  c.capsules.push_back({1, {0.0, 0.0, 0.0}, {0.45, 0.0, 0.0}, 0.015});
  c.capsules.push_back({2, {0.0, 0.0, 0.0}, {0.40, 0.0, 0.0}, 0.015});
  c.capsules.push_back({3, {0.0, 0.0, 0.0}, {0.10, 0.0, 0.0}, 0.015});
  c.capsules.push_back({5, {0.0, 0.0, 0.0}, {0.06, 0.0, 0.0}, 0.012});
  c.ring_mounts[0] = {RingSite::base, 0, t(0.0, 0.0, 0.45)};
  c.ring_mounts[1] = {RingSite::elbow, 2, Transform::Identity()};
  c.ring_mounts[2] = {RingSite::tool, 5, t(0.06, 0.0, 0.0)};
  return c;
}

Eigen::VectorXd vec6(std::initializer_list<double> v) {
  Eigen::VectorXd q(6);
  int i = 0;
  for (double x : v) q[i++] = x;
  return q;
}

}  // namespace

TEST_CASE("single revolute joint sweeps the tool tip on a circle") {
  const auto chain = single_z_joint();
  Eigen::VectorXd q(1);

  q[0] = 0.0;
  auto poses = forward_kinematics(chain, q);
  CHECK(tcp_pose(chain, poses).translation().isApprox(Vec3(1.0, 0.0, 0.0), 1e-12));

  q[0] = M_PI / 2.0;
  poses = forward_kinematics(chain, q);
  CHECK(tcp_pose(chain, poses).translation().isApprox(Vec3(0.0, 1.0, 0.0), 1e-12));
}

TEST_CASE("q dimension mismatch is rejected") {
  const auto chain = arm6();
  Eigen::VectorXd q(4);
  q.setZero();
  CHECK_THROWS_AS(forward_kinematics(chain, q), std::invalid_argument);
}

TEST_CASE("six-joint arm matches hand-derived positions at a slanted posture") {
  const auto chain = arm6();
  const double th = 0.6981317007977318;  // shoulder pitch, 40 degrees
  const auto q = vec6({0.0, th, 0.0, 0.0, 0.0, 0.0});
  const auto poses = forward_kinematics(chain, q);

  // Shoulder sits on top of the column.
  CHECK(poses[1].translation().isApprox(Vec3(0.0, 0.0, 1.05), 1e-12));

  // From the shoulder the remaining links form one straight segment of
  // length 1.07 pitched down by th.
  const double reach = 0.45 + 0.40 + 0.10 + 0.06 + 0.06;
  const Vec3 expect{reach * std::cos(th), 0.0, 1.05 - reach * std::sin(th)};
  CHECK(tcp_pose(chain, poses).translation().isApprox(expect, 1e-9));

  // Spinning the base carries the whole posture around z.
  const auto q2 = vec6({M_PI / 2.0, th, 0.0, 0.0, 0.0, 0.0});
  const auto poses2 = forward_kinematics(chain, q2);
  const Vec3 expect2{0.0, reach * std::cos(th), 1.05 - reach * std::sin(th)};
  CHECK(tcp_pose(chain, poses2).translation().isApprox(expect2, 1e-9));
}

TEST_CASE("zero joint rates give zero velocities everywhere") {
  const auto chain = arm6();
  const auto q = vec6({0.3, -0.4, 0.5, 0.2, -0.1, 0.7});
  const auto poses = forward_kinematics(chain, q);
  const auto qdot = vec6({0, 0, 0, 0, 0, 0});
  CHECK(tcp_velocity(chain, poses, qdot).norm() == 0.0);
  for (const auto& rs : ring_states(chain, poses, qdot)) {
    CHECK(rs.velocity.norm() == 0.0);
  }
}

TEST_CASE("base spin gives a tangential ring velocity of radius times rate") {
  KinematicChain c;
  c.joints.push_back({Transform::Identity(), Vec3::UnitZ()});
  c.tcp_offset = Transform::Identity();
  const double r = 0.37;
  c.ring_mounts[0] = {RingSite::base, 0, Transform(Eigen::Translation3d(r, 0.0, 0.0))};
  c.ring_mounts[1] = {RingSite::elbow, 0, Transform::Identity()};
  c.ring_mounts[2] = {RingSite::tool, 0, Transform::Identity()};

  Eigen::VectorXd q(1), qdot(1);
  q[0] = 0.0;
  qdot[0] = 2.5;
  const auto poses = forward_kinematics(c, q);
  const auto rings = ring_states(c, poses, qdot);
  CHECK(rings[0].velocity.isApprox(Vec3(0.0, r * 2.5, 0.0), 1e-12));
  CHECK(rings[0].velocity.norm() == Catch::Approx(r * 2.5).margin(1e-12));
}

TEST_CASE("base spin at the work posture moves the tool at its horizontal radius") {
  const auto chain = arm6();
  const double th = 0.6981317007977318;
  const auto q = vec6({0.0, th, 0.0, 0.0, 0.0, 0.0});
  const auto poses = forward_kinematics(chain, q);
  const auto qdot = vec6({1.0, 0.0, 0.0, 0.0, 0.0, 0.0});
  const double radius = 1.07 * std::cos(th);
  CHECK(tcp_velocity(chain, poses, qdot).norm() == Catch::Approx(radius).margin(1e-9));
}

TEST_CASE("point velocities match a central finite difference") {
  const auto chain = arm6();
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  const double h = 1e-6;

  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd q(6), qdot(6);
    for (int i = 0; i < 6; ++i) {
      q[i] = u(rng);
      qdot[i] = u(rng);
    }
    const auto poses = forward_kinematics(chain, q);

    const auto tcp_at = [&](const Eigen::VectorXd& qq) {
      return tcp_pose(chain, forward_kinematics(chain, qq)).translation();
    };
    const Vec3 fd = (tcp_at(q + h * qdot) - tcp_at(q - h * qdot)) / (2.0 * h);
    CHECK((tcp_velocity(chain, poses, qdot) - fd).norm() < 1e-5);

    const auto rings = ring_states(chain, poses, qdot);
    for (int site = 0; site < 3; ++site) {
      const auto center_at = [&](const Eigen::VectorXd& qq) {
        const auto p = forward_kinematics(chain, qq);
        const auto& m = chain.ring_mounts[site];
        return Vec3((p[m.link] * m.link_to_ring).translation());
      };
      const Vec3 fdr = (center_at(q + h * qdot) - center_at(q - h * qdot)) / (2.0 * h);
      CHECK((rings[site].velocity - fdr).norm() < 1e-5);
    }
  }
}

TEST_CASE("velocity is linear in the joint rates") {
  const auto chain = arm6();
  const auto q = vec6({0.2, 0.5, -0.3, 0.8, -0.6, 0.1});
  const auto poses = forward_kinematics(chain, q);
  const auto a = vec6({1.0, -0.5, 0.25, 0.0, 2.0, -1.0});
  const auto b = vec6({-0.3, 0.7, 1.1, -0.9, 0.4, 0.6});
  const Vec3 lhs = tcp_velocity(chain, poses, Eigen::VectorXd(2.0 * a + 0.5 * b));
  const Vec3 rhs = 2.0 * tcp_velocity(chain, poses, a) + 0.5 * tcp_velocity(chain, poses, b);
  CHECK((lhs - rhs).norm() < 1e-12);
}

TEST_CASE("posed capsules follow their link frames") {
  KinematicChain c;
  c.joints.push_back({Transform::Identity(), Vec3::UnitZ()});
  c.tcp_offset = Transform::Identity();
  c.capsules.push_back({0, {0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, 0.1});
  c.ring_mounts[0] = {RingSite::base, 0, Transform::Identity()};
  c.ring_mounts[1] = {RingSite::elbow, 0, Transform::Identity()};
  c.ring_mounts[2] = {RingSite::tool, 0, Transform::Identity()};

  Eigen::VectorXd q(1);
  q[0] = M_PI / 2.0;
  const auto caps = posed_capsules(c, forward_kinematics(c, q));
  REQUIRE(caps.size() == 1);
  CHECK(caps[0].p0.isApprox(Vec3::Zero(), 1e-12));
  CHECK(caps[0].p1.isApprox(Vec3(0.0, 1.0, 0.0), 1e-12));
  CHECK(caps[0].radius == 0.1);
}
