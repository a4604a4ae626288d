#pragma once

#include <Eigen/Core>
#include <cmath>

namespace rmader {

using Vec3 = Eigen::Vector3d;

/// Axis-aligned collision-safety box around an agent or obstacle center,
/// stored as half extents per axis (meters).
struct AgentBox {
  Vec3 half{0.0, 0.0, 0.0};

  bool valid() const { return half.x() > 0 && half.y() > 0 && half.z() > 0; }

  /// Minkowski sum of two boxes: the collision box between two centers.
  static AgentBox combined(const AgentBox& a, const AgentBox& b) {
    return AgentBox{a.half + b.half};
  }
};

/// Two box-shaped bodies overlap iff their center offset is inside the
/// combined box on all three axes simultaneously.
inline bool box_overlap(const Vec3& delta, const AgentBox& combined) {
  return std::abs(delta.x()) < combined.half.x() &&
         std::abs(delta.y()) < combined.half.y() &&
         std::abs(delta.z()) < combined.half.z();
}

/// Signed separation under the box metric: >= 0 means no overlap, negative
/// values give the penetration depth.
inline double box_margin(const Vec3& delta, const AgentBox& combined) {
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) m = std::max(m, std::abs(delta[i]) - combined.half[i]);
  return m;
}

}  // namespace rmader
