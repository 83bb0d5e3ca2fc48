#include "pace/body.hpp"

#include <cmath>

namespace pace {

static Mat3 skew(const Vec3& w) {
  Mat3 m;
  m << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return m;
}

Mat3 axis_angle_to_matrix(const Vec3& w) {
  const double t2 = w.squaredNorm();
  const double theta = std::sqrt(t2);
  double a, b;  // sin(t)/t, (1-cos(t))/t^2
  if (theta < 1e-6) {
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / t2;
  }
  const Mat3 k = skew(w);
  return Mat3::Identity() + a * k + b * k * k;
}

Mat3 so3_left_jacobian(const Vec3& w) {
  const double t2 = w.squaredNorm();
  const double theta = std::sqrt(t2);
  double b, c;  // (1-cos)/t^2, (t-sin)/t^3
  if (theta < 1e-6) {
    b = 0.5 - t2 / 24.0;
    c = 1.0 / 6.0 - t2 / 120.0;
  } else {
    b = (1.0 - std::cos(theta)) / t2;
    c = (theta - std::sin(theta)) / (t2 * theta);
  }
  const Mat3 k = skew(w);
  return Mat3::Identity() + b * k + c * k * k;
}

// ---------------------------------------------------------------------------
// Skeleton / pose
// ---------------------------------------------------------------------------

void Skeleton::validate() const {
  check(parent[0] == -1, "skeleton: joint 0 must be the root");
  for (int j = 1; j < kJointCount; ++j) {
    check(parent[j] >= 0 && parent[j] < j, "skeleton: joint ", j,
          " must have a lower-indexed parent, got ", parent[j]);
  }
  for (int j = 0; j < kJointCount; ++j)
    check(offset[j].allFinite(), "skeleton: non-finite offset at joint ", j);
}

std::array<Isometry, kJointCount> Skeleton::rest_globals() const {
  std::array<Isometry, kJointCount> g;
  for (int j = 0; j < kJointCount; ++j) {
    Isometry local = Isometry(Eigen::Translation3d(offset[j]));
    g[j] = j == 0 ? local : g[parent[j]] * local;
  }
  return g;
}

void BodyPose::wrap_rotations() {
  for (Vec3& w : rotation) {
    const double theta = w.norm();
    if (theta > M_PI) {
      // Same rotation, magnitude in (-pi, pi].
      const double wrapped = std::remainder(theta, 2.0 * M_PI);
      w *= wrapped / theta;
    }
  }
}

bool BodyPose::all_finite() const {
  if (!root_translation.allFinite()) return false;
  for (const Vec3& w : rotation)
    if (!w.allFinite()) return false;
  return true;
}

JointTransforms forward_kinematics(const Skeleton& skeleton, const BodyPose& pose) {
  JointTransforms out;
  for (int j = 0; j < kJointCount; ++j) {
    Isometry local;
    local.linear() = axis_angle_to_matrix(pose.rotation[j]);
    local.translation() = skeleton.offset[j];
    if (j == 0) {
      out.global[0] = Isometry(Eigen::Translation3d(pose.root_translation)) * local;
    } else {
      out.global[j] = out.global[skeleton.parent[j]] * local;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Template / skinning
// ---------------------------------------------------------------------------

void SkinnedTemplate::validate() const {
  check(!rest_vertices.empty(), "template: no vertices");
  check(influences.size() == rest_vertices.size(), "template: influence count mismatch");
  check(parts.empty() || parts.size() == rest_vertices.size(), "template: parts count mismatch");
  for (std::size_t v = 0; v < influences.size(); ++v) {
    double sum = 0.0;
    for (int s = 0; s < 4; ++s) {
      const int j = influences[v].joints[s];
      const double w = influences[v].weights[s];
      if (j < 0) {
        check(w == 0.0, "template: weight on unused slot, vertex ", v);
        continue;
      }
      check(j < kJointCount, "template: joint index out of range at vertex ", v);
      check(w >= 0.0, "template: negative weight at vertex ", v);
      sum += w;
    }
    check(std::abs(sum - 1.0) <= 1e-6, "template: weights sum to ", sum, " at vertex ", v);
  }
  const int nv = int(rest_vertices.size());
  for (const auto& tri : triangles)
    for (int c = 0; c < 3; ++c)
      check(tri[c] >= 0 && tri[c] < nv, "template: triangle index out of range");
}

void SkinnedTemplate::bind(const Skeleton& skeleton) {
  const auto rest = skeleton.rest_globals();
  for (int j = 0; j < kJointCount; ++j) inverse_bind[j] = rest[j].inverse();
}

BodyMesh skin_vertices(const SkinnedTemplate& tpl, const JointTransforms& transforms) {
  std::array<Eigen::Affine3d, kJointCount> skin;
  for (int j = 0; j < kJointCount; ++j) skin[j] = transforms.global[j] * tpl.inverse_bind[j];

  BodyMesh mesh;
  mesh.vertices.resize(tpl.rest_vertices.size());
  for (std::size_t v = 0; v < tpl.rest_vertices.size(); ++v) {
    Vec3 acc = Vec3::Zero();
    const auto& inf = tpl.influences[v];
    for (int s = 0; s < 4; ++s) {
      if (inf.joints[s] < 0) continue;
      acc += inf.weights[s] * (skin[inf.joints[s]] * tpl.rest_vertices[v]);
    }
    mesh.vertices[v] = acc;
  }
  return mesh;
}

// ---------------------------------------------------------------------------
// Pose Jacobian
// ---------------------------------------------------------------------------

PoseJacobian::PoseJacobian(const SkinnedTemplate& tpl, const Skeleton& skeleton,
                           const BodyPose& pose)
    : tpl_(&tpl) {
  const JointTransforms transforms = forward_kinematics(skeleton, pose);
  for (int j = 0; j < kJointCount; ++j) skin_[j] = transforms.global[j] * tpl.inverse_bind[j];

  posed_.vertices.resize(tpl.rest_vertices.size());
  for (std::size_t v = 0; v < tpl.rest_vertices.size(); ++v) {
    Vec3 acc = Vec3::Zero();
    const auto& inf = tpl.influences[v];
    for (int s = 0; s < 4; ++s)
      if (inf.joints[s] >= 0) acc += inf.weights[s] * (skin_[inf.joints[s]] * tpl.rest_vertices[v]);
    posed_.vertices[v] = acc;
  }

  // Rotation of joint k acts about pivot p_k with world axis a_ki for
  // parameter i: d(point)/d w_ki = a_ki x (point - p_k) for points rigidly
  // attached below k. a_ki = R_pre(k) * J_l(w_k) e_i.
  for (int k = 0; k < kJointCount; ++k) {
    Mat3 r_pre;
    Vec3 t_pre;
    if (k == 0) {
      r_pre = Mat3::Identity();
      t_pre = pose.root_translation + skeleton.offset[0];
    } else {
      const Isometry& gp = transforms.global[skeleton.parent[k]];
      r_pre = gp.linear();
      t_pre = gp * skeleton.offset[k];
    }
    pivot_[k] = t_pre;
    axes_[k] = r_pre * so3_left_jacobian(pose.rotation[k]);
  }

  for (int j = 0; j < kJointCount; ++j) {
    std::uint32_t mask = 0;
    for (int a = j; a != -1; a = (a == 0 ? -1 : skeleton.parent[a])) mask |= 1u << a;
    ancestors_[j] = mask;
  }
}

Eigen::Matrix<double, 3, kPoseParamsPerFrame> PoseJacobian::vertex_jacobian(int vertex) const {
  Eigen::Matrix<double, 3, kPoseParamsPerFrame> jac;
  jac.setZero();
  jac.block<3, 3>(0, kJointCount * 3).setIdentity();

  const auto& inf = tpl_->influences[vertex];
  for (int s = 0; s < 4; ++s) {
    const int j = inf.joints[s];
    if (j < 0) continue;
    const double w = inf.weights[s];
    const Vec3 y = skin_[j] * tpl_->rest_vertices[vertex];
    for (int k = 0; k < kJointCount; ++k) {
      if (!(ancestors_[j] & (1u << k))) continue;
      const Vec3 d = y - pivot_[k];
      for (int i = 0; i < 3; ++i)
        jac.col(3 * k + i) += w * axes_[k].col(i).cross(d);
    }
  }
  return jac;
}

void PoseJacobian::accumulate_transposed(std::span<const Vec3> vertex_grads, double scale,
                                         std::span<double> out) const {
  check(vertex_grads.size() == tpl_->rest_vertices.size(), "jacobian: gradient count mismatch");
  check(out.size() == std::size_t(kPoseParamsPerFrame), "jacobian: output size mismatch");

  // Per-joint force and torque-about-origin resultants; the chain rule then
  // reduces to one dot product per parameter.
  std::array<Vec3, kJointCount> force;
  std::array<Vec3, kJointCount> torque;
  force.fill(Vec3::Zero());
  torque.fill(Vec3::Zero());
  Vec3 total = Vec3::Zero();

  for (std::size_t v = 0; v < vertex_grads.size(); ++v) {
    const Vec3& g = vertex_grads[v];
    total += g;
    const auto& inf = tpl_->influences[v];
    for (int s = 0; s < 4; ++s) {
      const int j = inf.joints[s];
      if (j < 0) continue;
      const double w = inf.weights[s];
      const Vec3 y = skin_[j] * tpl_->rest_vertices[v];
      force[j] += w * g;
      torque[j] += w * y.cross(g);
    }
  }

  for (int k = 0; k < kJointCount; ++k) {
    Vec3 f = Vec3::Zero(), m = Vec3::Zero();
    for (int j = 0; j < kJointCount; ++j) {
      if (!(ancestors_[j] & (1u << k))) continue;
      f += force[j];
      m += torque[j];
    }
    const Vec3 moment = m - pivot_[k].cross(f);
    for (int i = 0; i < 3; ++i) out[3 * k + i] += scale * axes_[k].col(i).dot(moment);
  }
  for (int i = 0; i < 3; ++i) out[kJointCount * 3 + i] += scale * total[i];
}

// ---------------------------------------------------------------------------
// Default body
// ---------------------------------------------------------------------------

namespace {

struct TemplateBuilder {
  SkinnedTemplate tpl;

  int add_vertex(const Vec3& p, int j0, double w0, int j1, double w1, int part) {
    tpl.rest_vertices.push_back(p);
    SkinnedTemplate::Influence inf;
    if (w1 <= 1e-12) {
      inf.joints[0] = j0;
      inf.weights[0] = 1.0;
    } else {
      inf.joints[0] = j0;
      inf.weights[0] = w0;
      inf.joints[1] = j1;
      inf.weights[1] = w1;
    }
    tpl.influences.push_back(inf);
    tpl.parts.push_back(part);
    return int(tpl.rest_vertices.size()) - 1;
  }

  // Tube along p0 -> p1 bound to `bind_near` at t=0 blending into `bind_far`
  // by t=1; `part` tags vertices for body-part rules.
  void add_tube(const Vec3& p0, const Vec3& p1, double r0, double r1, int rings, int segs,
                int bind_near, int bind_far, int part, bool cap0, bool cap1) {
    const Vec3 axis = p1 - p0;
    Vec3 u = std::abs(axis.normalized().y()) < 0.9 ? Vec3(0, 1, 0) : Vec3(1, 0, 0);
    const Vec3 w = axis.normalized();
    u = (u - u.dot(w) * w).normalized();
    const Vec3 v = w.cross(u);

    const int base = int(tpl.rest_vertices.size());
    for (int ring = 0; ring < rings; ++ring) {
      const double t = rings == 1 ? 0.5 : double(ring) / (rings - 1);
      const double radius = r0 + (r1 - r0) * t;
      const Vec3 center = p0 + t * axis;
      // Far-joint weight ramps up over the last third of the tube.
      const double wf = bind_far >= 0 ? std::clamp((t - 0.66) / 0.34, 0.0, 1.0) * 0.5 : 0.0;
      for (int s = 0; s < segs; ++s) {
        const double phi = 2.0 * M_PI * s / segs;
        const Vec3 p = center + radius * (std::cos(phi) * u + std::sin(phi) * v);
        add_vertex(p, bind_near, 1.0 - wf, bind_far, wf, part);
      }
    }
    for (int ring = 0; ring + 1 < rings; ++ring) {
      for (int s = 0; s < segs; ++s) {
        const int a = base + ring * segs + s;
        const int b = base + ring * segs + (s + 1) % segs;
        const int c = a + segs;
        const int d = b + segs;
        tpl.triangles.push_back({a, b, c});
        tpl.triangles.push_back({b, d, c});
      }
    }
    if (cap0) {
      const int center = add_vertex(p0, bind_near, 1.0, -1, 0.0, part);
      for (int s = 0; s < segs; ++s)
        tpl.triangles.push_back({center, base + (s + 1) % segs, base + s});
    }
    if (cap1) {
      const double wf = bind_far >= 0 ? 0.5 : 0.0;
      const int center = add_vertex(p1, bind_near, 1.0 - wf, bind_far, wf, part);
      const int last = base + (rings - 1) * segs;
      for (int s = 0; s < segs; ++s)
        tpl.triangles.push_back({center, last + s, last + (s + 1) % segs});
    }
  }

  void add_ellipsoid(const Vec3& center, const Vec3& radii, int rings, int segs, int joint,
                     int part) {
    const int base = int(tpl.rest_vertices.size());
    for (int ring = 1; ring < rings; ++ring) {
      const double lat = M_PI * ring / rings - M_PI / 2.0;
      for (int s = 0; s < segs; ++s) {
        const double lon = 2.0 * M_PI * s / segs;
        const Vec3 p = center + Vec3(radii.x() * std::cos(lat) * std::cos(lon),
                                     radii.y() * std::sin(lat),
                                     radii.z() * std::cos(lat) * std::sin(lon));
        add_vertex(p, joint, 1.0, -1, 0.0, part);
      }
    }
    const int south = add_vertex(center - Vec3(0, radii.y(), 0), joint, 1.0, -1, 0.0, part);
    const int north = add_vertex(center + Vec3(0, radii.y(), 0), joint, 1.0, -1, 0.0, part);
    const int bands = rings - 1;
    for (int ring = 0; ring + 1 < bands; ++ring)
      for (int s = 0; s < segs; ++s) {
        const int a = base + ring * segs + s;
        const int b = base + ring * segs + (s + 1) % segs;
        tpl.triangles.push_back({a, b, a + segs});
        tpl.triangles.push_back({b, b + segs, a + segs});
      }
    for (int s = 0; s < segs; ++s) {
      tpl.triangles.push_back({south, base + (s + 1) % segs, base + s});
      const int last = base + (bands - 1) * segs;
      tpl.triangles.push_back({north, last + s, last + (s + 1) % segs});
    }
  }
};

}  // namespace

BodyModel make_default_body() {
  BodyModel body;
  Skeleton& sk = body.skeleton;
  sk.parent = {-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};
  auto set = [&](int j, double x, double y, double z) { sk.offset[j] = Vec3(x, y, z); };
  set(0, 0, 0.97, 0);
  set(1, 0.09, -0.07, 0);
  set(2, -0.09, -0.07, 0);
  set(3, 0, 0.11, 0);
  set(4, 0.015, -0.40, 0);
  set(5, -0.015, -0.40, 0);
  set(6, 0, 0.12, 0);
  set(7, 0, -0.43, 0);
  set(8, 0, -0.43, 0);
  set(9, 0, 0.12, 0);
  set(10, 0, -0.06, 0.13);
  set(11, 0, -0.06, 0.13);
  set(12, 0, 0.12, 0);
  set(13, 0.08, 0.04, 0);
  set(14, -0.08, 0.04, 0);
  set(15, 0, 0.11, 0);
  set(16, 0.10, 0.01, 0);
  set(17, -0.10, 0.01, 0);
  set(18, 0.26, 0, 0);
  set(19, -0.26, 0, 0);
  set(20, 0.25, 0, 0);
  set(21, -0.25, 0, 0);
  set(22, 0.08, 0, 0);
  set(23, -0.08, 0, 0);
  sk.validate();

  const auto rest = sk.rest_globals();
  auto pos = [&](int j) { return Vec3(rest[j].translation()); };

  TemplateBuilder b;
  // Torso column.
  b.add_tube(pos(0) - Vec3(0, 0.10, 0), pos(3), 0.11, 0.12, 3, 10, 0, 3, 3, true, false);
  b.add_tube(pos(3), pos(6), 0.12, 0.13, 3, 10, 3, 6, 6, false, false);
  b.add_tube(pos(6), pos(9), 0.13, 0.12, 3, 10, 6, 9, 9, false, false);
  b.add_tube(pos(9), pos(12), 0.12, 0.10, 3, 10, 9, 12, 12, false, true);
  // Neck and head.
  b.add_tube(pos(12), pos(15), 0.05, 0.05, 2, 8, 12, 15, 15, false, false);
  b.add_ellipsoid(pos(15) + Vec3(0, 0.09, 0.01), Vec3(0.085, 0.11, 0.095), 6, 8, 15, 15);
  // Legs: hip blend, thigh, shin, foot.
  for (int side = 0; side < 2; ++side) {
    const int hip = 1 + side, knee = 4 + side, ankle = 7 + side, foot = 10 + side;
    b.add_tube(pos(0), pos(hip), 0.09, 0.08, 2, 8, 0, hip, hip, false, false);
    b.add_tube(pos(hip), pos(knee), 0.080, 0.055, 4, 8, hip, knee, knee, false, false);
    b.add_tube(pos(knee), pos(ankle), 0.055, 0.040, 4, 8, knee, ankle, ankle, false, false);
    // Foot: heel-to-toe box-ish tube hugging the ground.
    const Vec3 heel = pos(ankle) + Vec3(0, -0.045, -0.05);
    const Vec3 toe = pos(foot) + Vec3(0, -0.012, 0.06);
    b.add_tube(heel, toe, 0.035, 0.028, 4, 8, ankle, foot, foot, true, true);
  }
  // Arms: collar, upper arm, forearm, hand.
  for (int side = 0; side < 2; ++side) {
    const int collar = 13 + side, shoulder = 16 + side, elbow = 18 + side, wrist = 20 + side,
              hand = 22 + side;
    b.add_tube(pos(9), pos(shoulder), 0.06, 0.055, 2, 8, collar, shoulder, collar, false, false);
    b.add_tube(pos(shoulder), pos(elbow), 0.050, 0.042, 4, 8, shoulder, elbow, elbow, false,
               false);
    b.add_tube(pos(elbow), pos(wrist), 0.042, 0.033, 4, 8, elbow, wrist, wrist, false, false);
    const Vec3 tip = pos(hand) + (pos(hand) - pos(wrist)).normalized() * 0.09;
    b.add_tube(pos(wrist), tip, 0.035, 0.025, 3, 8, wrist, hand, hand, false, true);
  }

  // Stand exactly on y = 0.
  double min_y = std::numeric_limits<double>::infinity();
  for (const Vec3& v : b.tpl.rest_vertices) min_y = std::min(min_y, v.y());
  for (Vec3& v : b.tpl.rest_vertices) v.y() -= min_y;
  sk.offset[0].y() -= min_y;

  body.surface = std::move(b.tpl);
  body.surface.bind(body.skeleton);
  body.surface.validate();
  return body;
}

}  // namespace pace
