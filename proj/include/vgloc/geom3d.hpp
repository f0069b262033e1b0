// Copyright (c) 2026 The vgloc authors
// SPDX-License-Identifier: Apache-2.0
//
// Rigid-body geometry kernel: SE(3) exp/log, depth back-projection and the
// 3D projection loss with analytic gradients w.r.t. the 6-DoF pose vector.

#ifndef VGLOC_GEOM3D_HPP
#define VGLOC_GEOM3D_HPP

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "vgloc/error.hpp"

namespace vgloc {

/// 6-DoF pose: rotation vector (so(3), radians) followed by translation
/// (meters). Interpreted as a full se(3) twist, see se3_exp().
struct Pose6 {
  Eigen::Vector3d rot{0, 0, 0};
  Eigen::Vector3d trans{0, 0, 0};

  Pose6() = default;
  Pose6(const Eigen::Vector3d& r, const Eigen::Vector3d& t) : rot(r), trans(t) {}
  Pose6(double rx, double ry, double rz, double tx, double ty, double tz)
      : rot(rx, ry, rz), trans(tx, ty, tz) {}

  Eigen::Matrix<double, 6, 1> vector() const {
    Eigen::Matrix<double, 6, 1> v;
    v << rot, trans;
    return v;
  }

  void validate() const;
};

/// 4x4 homogeneous rigid-body transform.
struct Transform {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();

  static Transform identity() { return Transform{}; }

  Eigen::Matrix3d rotation() const { return m.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return m.topRightCorner<3, 1>(); }

  void validate() const;
};

struct CameraIntrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;

  void validate() const;
};

/// Per-pixel depth in meters. Non-positive or non-finite values mark
/// invalid pixels (missing stereo depth).
struct DepthMap {
  int w = 0, h = 0;
  std::vector<float> values;  // row-major, h rows of w

  DepthMap() = default;
  DepthMap(int width, int height, float fill = 0.f)
      : w(width), h(height), values(static_cast<size_t>(width) * height, fill) {}

  float& at(int u, int v) { return values[static_cast<size_t>(v) * w + u]; }
  float at(int u, int v) const { return values[static_cast<size_t>(v) * w + u]; }

  static bool valid_depth(float d) { return std::isfinite(d) && d > 0.f; }

  void validate() const;
};

/// Homogenized 3D points, one per pixel, with a validity mask.
struct PointGrid {
  int w = 0, h = 0;
  std::vector<Eigen::Vector4d> points;
  std::vector<uint8_t> valid;

  const Eigen::Vector4d& at(int u, int v) const {
    return points[static_cast<size_t>(v) * w + u];
  }
  bool is_valid(int u, int v) const {
    return valid[static_cast<size_t>(v) * w + u] != 0;
  }
};

// --- SE(3) -----------------------------------------------------------------

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// Rodrigues rotation from a rotation vector.
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& rot);

/// Left Jacobian of SO(3) (the V matrix coupling twist translation).
Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& rot);

/// SE(3) exponential: rotation = Rodrigues(rot), translation = V(rot)*trans.
Transform se3_exp(const Pose6& delta);

/// SE(3) logarithm; inverse of se3_exp for rotation angles < pi - 1e-6.
Pose6 se3_log(const Transform& t);

Transform se3_inverse(const Transform& t);
Transform se3_compose(const Transform& a, const Transform& b);

/// Re-orthonormalize the rotation block via polar decomposition.
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& r);

// --- Projection geometry -----------------------------------------------------

/// Back-project a depth map through the inverse camera matrix:
/// p = homogenize(d * K^-1 * (u, v, 1)^T) at every valid pixel.
PointGrid backproject(const DepthMap& depth, const CameraIntrinsics& k);

/// Apply a rigid transform to every valid point; the mask is preserved.
PointGrid transform_points(const Transform& t, const PointGrid& g);

/// Mean Euclidean distance, over valid pixels, between scene points
/// transformed by the predicted vs ground-truth relative pose.
double projection_loss(const Pose6& delta_pred, const Pose6& delta_gt,
                       const DepthMap& depth, const CameraIntrinsics& k);

enum class DegeneratePolicy {
  Throw,  // residual norm <= 1e-12 at any pixel is an error
  Skip,   // such pixels contribute a zero (sub)gradient
};

/// Analytic gradient of projection_loss w.r.t. delta_pred
/// (rotation components first).
Eigen::Matrix<double, 6, 1> projection_loss_grad(
    const Pose6& delta_pred, const Pose6& delta_gt, const DepthMap& depth,
    const CameraIntrinsics& k, DegeneratePolicy policy = DegeneratePolicy::Throw);

// --- File formats ------------------------------------------------------------

/// PFM (portable float map), little-endian, scale -1.0, rows bottom-up.
void write_pfm(const std::string& path, const DepthMap& depth);
DepthMap read_pfm(const std::string& path);

/// Plain-text intrinsics: four lines, fx fy cx cy.
void write_intrinsics(const std::string& path, const CameraIntrinsics& k);
CameraIntrinsics read_intrinsics(const std::string& path);

}  // namespace vgloc

#endif  // VGLOC_GEOM3D_HPP
