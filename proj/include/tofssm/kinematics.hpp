#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "tofssm/geometry.hpp"
#include "tofssm/scene.hpp"

namespace tofssm {

struct RevoluteJoint {
  Transform parent_to_joint = Transform::Identity();
  Vec3 axis = Vec3::UnitZ();  // unit, in the joint frame
};

/// Collision capsule attached to a link, endpoints in that link's frame.
struct LinkCapsule {
  int link = 0;
  Vec3 p0, p1;
  double radius = 0.0;
};

enum class RingSite : int { base = 0, elbow = 1, tool = 2 };

/// Ring-center frame has z along the ring axis; sensors radiate in its xy plane.
struct RingMount {
  RingSite site = RingSite::base;
  int link = 0;
  Transform link_to_ring = Transform::Identity();
};

struct KinematicChain {
  std::vector<RevoluteJoint> joints;
  std::vector<LinkCapsule> capsules;
  std::array<RingMount, 3> ring_mounts;  // indexed by RingSite
  Transform tcp_offset = Transform::Identity();

  int dof() const { return static_cast<int>(joints.size()); }
};

/// World pose of every link frame (frame i = after joint i rotation).
inline std::vector<Transform> forward_kinematics(const KinematicChain& chain,
                                                 const Eigen::VectorXd& q) {
  if (q.size() != chain.dof()) {
    throw std::invalid_argument("forward_kinematics: q dimension does not match chain dof");
  }
  std::vector<Transform> poses(chain.joints.size());
  Transform t = Transform::Identity();
  for (size_t i = 0; i < chain.joints.size(); ++i) {
    t = t * chain.joints[i].parent_to_joint *
        Transform(Eigen::AngleAxisd(q[static_cast<int>(i)], chain.joints[i].axis));
    poses[i] = t;
  }
  return poses;
}

/// Velocity of a world-frame point rigidly attached to `link`.
inline Vec3 point_velocity(const KinematicChain& chain, const std::vector<Transform>& poses,
                           const Eigen::VectorXd& qdot, int link, const Vec3& world_point) {
  if (qdot.size() != chain.dof()) {
    throw std::invalid_argument("point_velocity: qdot dimension does not match chain dof");
  }
  Vec3 v = Vec3::Zero();
  for (int j = 0; j <= link; ++j) {
    const Vec3 omega = poses[j].linear() * chain.joints[j].axis;
    v += qdot[j] * omega.cross(world_point - poses[j].translation());
  }
  return v;
}

inline Transform tcp_pose(const KinematicChain& chain, const std::vector<Transform>& poses) {
  return poses.back() * chain.tcp_offset;
}

inline Vec3 tcp_velocity(const KinematicChain& chain, const std::vector<Transform>& poses,
                         const Eigen::VectorXd& qdot) {
  const Vec3 p = tcp_pose(chain, poses).translation();
  return point_velocity(chain, poses, qdot, chain.dof() - 1, p);
}

struct RingState {
  Transform pose;   // world ring-center frame
  Vec3 center;
  Vec3 velocity;    // world velocity of the center
};

inline std::array<RingState, 3> ring_states(const KinematicChain& chain,
                                            const std::vector<Transform>& poses,
                                            const Eigen::VectorXd& qdot) {
  std::array<RingState, 3> out;
  for (const auto& mount : chain.ring_mounts) {
    RingState s;
    s.pose = poses[mount.link] * mount.link_to_ring;
    s.center = s.pose.translation();
    s.velocity = point_velocity(chain, poses, qdot, mount.link, s.center);
    out[static_cast<int>(mount.site)] = s;
  }
  return out;
}

/// Link capsules posed into the world at the given configuration.
inline std::vector<Capsule> posed_capsules(const KinematicChain& chain,
                                           const std::vector<Transform>& poses) {
  std::vector<Capsule> out;
  out.reserve(chain.capsules.size());
  for (const auto& c : chain.capsules) {
    out.push_back({poses[c.link] * c.p0, poses[c.link] * c.p1, c.radius});
  }
  return out;
}

}  // namespace tofssm
