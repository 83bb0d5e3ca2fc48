#pragma once

#include <array>
#include <span>
#include <vector>

#include "pace/common.hpp"

namespace pace {

inline constexpr int kJointCount = 24;
/// 24 axis-angle joints plus the root translation.
inline constexpr int kPoseParamsPerFrame = kJointCount * 3 + 3;

/// Rotation matrix from an axis-angle vector; Taylor-expanded below 1e-6 rad.
Mat3 axis_angle_to_matrix(const Vec3& w);

/// Left Jacobian of SO(3): d/dw_i exp(w) = skew(J_l(w) e_i) * exp(w).
Mat3 so3_left_jacobian(const Vec3& w);

struct Skeleton {
  std::array<int, kJointCount> parent{};   // parent[0] == -1, tree rooted at 0
  std::array<Vec3, kJointCount> offset{};  // rest offset from parent (root: from origin)

  void validate() const;
  std::array<Isometry, kJointCount> rest_globals() const;
};

struct BodyPose {
  Vec3 root_translation = Vec3::Zero();
  std::array<Vec3, kJointCount> rotation{};  // axis-angle, radians

  /// Wraps each axis-angle magnitude into (-pi, pi]; applied on load.
  void wrap_rotations();
  bool all_finite() const;
};

struct JointTransforms {
  std::array<Isometry, kJointCount> global;
};

struct SkinnedTemplate {
  struct Influence {
    std::array<int, 4> joints = {-1, -1, -1, -1};
    std::array<double, 4> weights = {0, 0, 0, 0};
  };

  std::vector<Vec3> rest_vertices;
  std::vector<Influence> influences;             // per vertex
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> parts;                        // per vertex: child joint of the generating bone
  std::array<Isometry, kJointCount> inverse_bind;  // from the binding skeleton's rest pose

  std::size_t vertex_count() const { return rest_vertices.size(); }
  void validate() const;
  void bind(const Skeleton& skeleton);  // recompute inverse_bind
};

struct BodyMesh {
  std::vector<Vec3> vertices;
};

/// Skeleton plus surface, bundled for pipeline plumbing.
struct BodyModel {
  Skeleton skeleton;
  SkinnedTemplate surface;
};

JointTransforms forward_kinematics(const Skeleton& skeleton, const BodyPose& pose);

BodyMesh skin_vertices(const SkinnedTemplate& tpl, const JointTransforms& transforms);

/// Per-frame derivative of posed vertices w.r.t. the 75 pose parameters
/// (joint axis-angles first, root translation last). Dense rows are built
/// lazily per vertex; objective gradients use the aggregated transpose-apply.
class PoseJacobian {
public:
  PoseJacobian(const SkinnedTemplate& tpl, const Skeleton& skeleton, const BodyPose& pose);

  const BodyMesh& posed() const { return posed_; }

  /// 3 x 75 derivative of one posed vertex.
  Eigen::Matrix<double, 3, kPoseParamsPerFrame> vertex_jacobian(int vertex) const;

  /// out[p] += scale * sum_v J_v^T grads[v]; grads are in the body frame.
  void accumulate_transposed(std::span<const Vec3> vertex_grads, double scale,
                             std::span<double> out) const;

private:
  const SkinnedTemplate* tpl_;
  BodyMesh posed_;
  std::array<Eigen::Affine3d, kJointCount> skin_;  // global * inverse_bind
  std::array<Vec3, kJointCount> pivot_;            // world joint positions
  std::array<Mat3, kJointCount> axes_;             // R_pre * J_l(w); column i drives param i
  std::array<std::uint32_t, kJointCount> ancestors_;  // bitmask: ancestors of j including j
};

/// Built-in low-poly skinned body (~655 vertices, 24 joints) standing on
/// y = 0, facing +z, T-pose. Deterministic.
BodyModel make_default_body();

}  // namespace pace
