// Copyright (c) 2026 The vgloc authors
// SPDX-License-Identifier: Apache-2.0

#include "vgloc/geom3d.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace vgloc {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTaylorThreshold = 1e-4;

// Kahan compensated accumulator.
struct Kahan {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

// Scalar coefficients of the Rodrigues / left-Jacobian closed forms and
// their derivatives w.r.t. the angle, divided by the angle:
//   A = sin(t)/t, B = (1-cos(t))/t^2, C = (t-sin(t))/t^3
//   Ad = A'(t)/t, Bd = B'(t)/t, Cd = C'(t)/t
struct RotCoeffs {
  double A, B, C, Ad, Bd, Cd;
};

RotCoeffs rot_coeffs(double theta) {
  RotCoeffs c{};
  const double t2 = theta * theta;
  if (theta < kTaylorThreshold) {
    c.A = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    c.B = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
    c.C = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
    c.Ad = -1.0 / 3.0 + t2 / 30.0;
    c.Bd = -1.0 / 12.0 + t2 / 180.0;
    c.Cd = -1.0 / 60.0 + t2 / 1260.0;
  } else {
    const double s = std::sin(theta), co = std::cos(theta);
    const double t3 = t2 * theta, t4 = t3 * theta, t5 = t4 * theta;
    c.A = s / theta;
    c.B = (1.0 - co) / t2;
    c.C = (theta - s) / t3;
    c.Ad = (theta * co - s) / t3;
    c.Bd = (theta * s - 2.0 * (1.0 - co)) / t4;
    c.Cd = (theta * (1.0 - co) - 3.0 * (theta - s)) / t5;
  }
  return c;
}

void check_finite(const Pose6& p) {
  for (int i = 0; i < 3; ++i) {
    require(std::isfinite(p.rot[i]) && std::isfinite(p.trans[i]),
            ErrorCode::NonFinite, "pose component not finite");
  }
}

}  // namespace

void Pose6::validate() const {
  check_finite(*this);
  require(rot.norm() < kPi + 1e-6, ErrorCode::OutOfRange,
          "rotation-vector norm out of canonical range");
}

void Transform::validate() const {
  require(m.allFinite(), ErrorCode::InvalidTransform, "transform not finite");
  const Eigen::Matrix3d r = rotation();
  const double drift = (r.transpose() * r - Eigen::Matrix3d::Identity()).norm();
  require(drift < 1e-9, ErrorCode::InvalidTransform,
          "rotation block not orthonormal");
  require(r.determinant() > 0, ErrorCode::InvalidTransform,
          "rotation block is a reflection");
  require(m(3, 0) == 0 && m(3, 1) == 0 && m(3, 2) == 0 && m(3, 3) == 1,
          ErrorCode::InvalidTransform, "bottom row must be (0,0,0,1)");
}

void CameraIntrinsics::validate() const {
  require(fx > 0 && fy > 0, ErrorCode::OutOfRange, "focal lengths must be > 0");
  require(std::isfinite(fx) && std::isfinite(fy) && std::isfinite(cx) &&
              std::isfinite(cy),
          ErrorCode::NonFinite, "intrinsics not finite");
}

void DepthMap::validate() const {
  require(w >= 1 && h >= 1, ErrorCode::OutOfRange, "depth map dims must be >= 1");
  require(values.size() == static_cast<size_t>(w) * h,
          ErrorCode::DimensionMismatch, "depth buffer size mismatch");
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  // clang-format off
  s <<     0, -v.z(),  v.y(),
       v.z(),      0, -v.x(),
      -v.y(),  v.x(),      0;
  // clang-format on
  return s;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& rot) {
  const double theta = rot.norm();
  const RotCoeffs c = rot_coeffs(theta);
  const Eigen::Matrix3d k = skew(rot);
  return Eigen::Matrix3d::Identity() + c.A * k + c.B * k * k;
}

Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& rot) {
  const double theta = rot.norm();
  const RotCoeffs c = rot_coeffs(theta);
  const Eigen::Matrix3d k = skew(rot);
  return Eigen::Matrix3d::Identity() + c.B * k + c.C * k * k;
}

Transform se3_exp(const Pose6& delta) {
  delta.validate();
  Transform t;
  t.m.setIdentity();
  t.m.topLeftCorner<3, 3>() = so3_exp(delta.rot);
  t.m.topRightCorner<3, 1>() = so3_left_jacobian(delta.rot) * delta.trans;
  return t;
}

Pose6 se3_log(const Transform& t) {
  t.validate();
  const Eigen::Matrix3d r = t.rotation();
  // sin(theta)*axis from the skew part, cos(theta) from the trace.
  Eigen::Vector3d w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  w *= 0.5;
  const double s = w.norm();
  const double co = std::min(1.0, std::max(-1.0, (r.trace() - 1.0) * 0.5));
  const double theta = std::atan2(s, co);
  require(theta < kPi - 1e-6, ErrorCode::OutOfRange,
          "rotation angle too close to pi for a stable logarithm");

  Pose6 out;
  out.rot = (theta < 1e-8) ? w : Eigen::Vector3d(theta / s * w);

  // V^-1 = I - 1/2 K + D K^2 with D = (1 - A/(2B)) / theta^2.
  const Eigen::Matrix3d k = skew(out.rot);
  double d;
  if (theta < kTaylorThreshold) {
    d = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    const RotCoeffs c = rot_coeffs(theta);
    d = (1.0 - c.A / (2.0 * c.B)) / (theta * theta);
  }
  const Eigen::Matrix3d vinv =
      Eigen::Matrix3d::Identity() - 0.5 * k + d * k * k;
  out.trans = vinv * t.translation();
  return out;
}

Transform se3_inverse(const Transform& t) {
  t.validate();
  Transform out;
  const Eigen::Matrix3d rt = t.rotation().transpose();
  out.m.setIdentity();
  out.m.topLeftCorner<3, 3>() = rt;
  out.m.topRightCorner<3, 1>() = -rt * t.translation();
  return out;
}

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& r) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d q = svd.matrixU() * svd.matrixV().transpose();
  if (q.determinant() < 0) {
    Eigen::Matrix3d u = svd.matrixU();
    u.col(2) *= -1;
    q = u * svd.matrixV().transpose();
  }
  return q;
}

Transform se3_compose(const Transform& a, const Transform& b) {
  a.validate();
  b.validate();
  Transform out;
  out.m = a.m * b.m;
  Eigen::Matrix3d r = out.m.topLeftCorner<3, 3>();
  const double drift = (r.transpose() * r - Eigen::Matrix3d::Identity()).norm();
  if (drift > 1e-12) {
    out.m.topLeftCorner<3, 3>() = orthonormalize(r);
  }
  out.m.row(3) << 0, 0, 0, 1;
  return out;
}

PointGrid backproject(const DepthMap& depth, const CameraIntrinsics& k) {
  depth.validate();
  k.validate();
  PointGrid g;
  g.w = depth.w;
  g.h = depth.h;
  g.points.assign(static_cast<size_t>(g.w) * g.h, Eigen::Vector4d(0, 0, 0, 1));
  g.valid.assign(static_cast<size_t>(g.w) * g.h, 0);
  size_t n_valid = 0;
  for (int v = 0; v < depth.h; ++v) {
    for (int u = 0; u < depth.w; ++u) {
      const float d = depth.at(u, v);
      if (!DepthMap::valid_depth(d)) continue;
      const size_t i = static_cast<size_t>(v) * g.w + u;
      const double dd = d;
      g.points[i] = Eigen::Vector4d((u - k.cx) / k.fx * dd,
                                    (v - k.cy) / k.fy * dd, dd, 1.0);
      g.valid[i] = 1;
      ++n_valid;
    }
  }
  require(n_valid > 0, ErrorCode::EmptyDepth, "no valid depth pixel");
  return g;
}

PointGrid transform_points(const Transform& t, const PointGrid& g) {
  t.validate();
  PointGrid out = g;
  for (size_t i = 0; i < g.points.size(); ++i) {
    if (!g.valid[i]) continue;
    out.points[i] = t.m * g.points[i];
    out.points[i][3] = 1.0;  // exact by the bottom-row invariant
  }
  return out;
}

double projection_loss(const Pose6& delta_pred, const Pose6& delta_gt,
                       const DepthMap& depth, const CameraIntrinsics& k) {
  const Transform t_pred = se3_exp(delta_pred);
  const Transform t_gt = se3_exp(delta_gt);
  const PointGrid g = backproject(depth, k);

  const Eigen::Matrix3d rp = t_pred.rotation();
  const Eigen::Vector3d tp = t_pred.translation();
  const Eigen::Matrix3d rg = t_gt.rotation();
  const Eigen::Vector3d tg = t_gt.translation();

  Kahan acc;
  size_t n = 0;
  for (size_t i = 0; i < g.points.size(); ++i) {
    if (!g.valid[i]) continue;
    const Eigen::Vector3d p = g.points[i].head<3>();
    const Eigen::Vector3d r = (rp * p + tp) - (rg * p + tg);
    acc.add(r.norm());
    ++n;
  }
  return acc.sum / static_cast<double>(n);
}

Eigen::Matrix<double, 6, 1> projection_loss_grad(const Pose6& delta_pred,
                                                 const Pose6& delta_gt,
                                                 const DepthMap& depth,
                                                 const CameraIntrinsics& k,
                                                 DegeneratePolicy policy) {
  const Transform t_pred = se3_exp(delta_pred);
  const Transform t_gt = se3_exp(delta_gt);
  const PointGrid g = backproject(depth, k);

  const Eigen::Matrix3d rp = t_pred.rotation();
  const Eigen::Vector3d tp = t_pred.translation();
  const Eigen::Matrix3d rg = t_gt.rotation();
  const Eigen::Vector3d tg = t_gt.translation();

  // Derivatives of R(rot) and V(rot) w.r.t. each rotation component. These
  // do not depend on the pixel, so build them once:
  //   dR/dr_i = Ad*r_i*K + A*E_i + Bd*r_i*K^2 + B*(E_i K + K E_i)
  // and the same shape for V with (B, Bd, C, Cd).
  const Eigen::Vector3d rot = delta_pred.rot;
  const double theta = rot.norm();
  const RotCoeffs c = rot_coeffs(theta);
  const Eigen::Matrix3d kk = skew(rot);
  const Eigen::Matrix3d kk2 = kk * kk;
  const Eigen::Matrix3d v = Eigen::Matrix3d::Identity() + c.B * kk + c.C * kk2;

  Eigen::Matrix3d dr[3], dv[3];
  for (int i = 0; i < 3; ++i) {
    const Eigen::Matrix3d ei = skew(Eigen::Vector3d::Unit(i));
    const Eigen::Matrix3d mix = ei * kk + kk * ei;
    dr[i] = c.Ad * rot[i] * kk + c.A * ei + c.Bd * rot[i] * kk2 + c.B * mix;
    dv[i] = c.Bd * rot[i] * kk + c.B * ei + c.Cd * rot[i] * kk2 + c.C * mix;
  }
  // Per-pixel-constant part of d(Tp)/drot_i coming from V(rot)*trans.
  Eigen::Vector3d dvt[3];
  for (int i = 0; i < 3; ++i) dvt[i] = dv[i] * delta_pred.trans;

  Kahan acc[6];
  size_t n = 0;
  for (size_t i = 0; i < g.points.size(); ++i) {
    if (!g.valid[i]) continue;
    ++n;
    const Eigen::Vector3d p = g.points[i].head<3>();
    const Eigen::Vector3d r = (rp * p + tp) - (rg * p + tg);
    const double nr = r.norm();
    if (nr <= 1e-12) {
      require(policy == DegeneratePolicy::Skip, ErrorCode::DegenerateResidual,
              "residual norm below differentiability threshold");
      continue;
    }
    const Eigen::Vector3d u = r / nr;
    for (int j = 0; j < 3; ++j) {
      acc[j].add(u.dot(dr[j] * p + dvt[j]));
    }
    const Eigen::Vector3d gt_ = v.transpose() * u;
    for (int j = 0; j < 3; ++j) acc[3 + j].add(gt_[j]);
  }

  Eigen::Matrix<double, 6, 1> grad;
  for (int j = 0; j < 6; ++j) grad[j] = acc[j].sum / static_cast<double>(n);
  return grad;
}

// --- PFM / intrinsics I/O ----------------------------------------------------

void write_pfm(const std::string& path, const DepthMap& depth) {
  depth.validate();
  std::ofstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::IoError, "cannot open for writing: " + path);
  f << "Pf\n" << depth.w << " " << depth.h << "\n-1.0\n";
  // PFM stores rows bottom-up.
  for (int v = depth.h - 1; v >= 0; --v) {
    f.write(reinterpret_cast<const char*>(&depth.values[static_cast<size_t>(v) *
                                                        depth.w]),
            static_cast<std::streamsize>(depth.w) * sizeof(float));
  }
  require(f.good(), ErrorCode::IoError, "write failed: " + path);
}

DepthMap read_pfm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::IoError, "cannot open: " + path);
  std::string magic;
  int w = 0, h = 0;
  double scale = 0;
  f >> magic >> w >> h >> scale;
  require(magic == "Pf", ErrorCode::DataError, "not a grayscale PFM: " + path);
  require(w >= 1 && h >= 1, ErrorCode::DataError, "bad PFM dims: " + path);
  require(scale < 0, ErrorCode::DataError,
          "big-endian PFM not supported: " + path);
  f.get();  // single whitespace after the scale line
  DepthMap d(w, h);
  for (int v = h - 1; v >= 0; --v) {
    f.read(reinterpret_cast<char*>(&d.values[static_cast<size_t>(v) * w]),
           static_cast<std::streamsize>(w) * sizeof(float));
  }
  require(f.good(), ErrorCode::IoError, "truncated PFM: " + path);
  return d;
}

void write_intrinsics(const std::string& path, const CameraIntrinsics& k) {
  k.validate();
  std::ofstream f(path);
  require(f.good(), ErrorCode::IoError, "cannot open for writing: " + path);
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.17g\n%.17g\n%.17g\n%.17g\n", k.fx, k.fy,
                k.cx, k.cy);
  f << buf;
}

CameraIntrinsics read_intrinsics(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorCode::IoError, "cannot open: " + path);
  CameraIntrinsics k;
  f >> k.fx >> k.fy >> k.cx >> k.cy;
  require(!f.fail(), ErrorCode::DataError, "bad intrinsics file: " + path);
  k.validate();
  return k;
}

}  // namespace vgloc
