// Copyright 2026 The flowpose Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "flowpose/lie_se3.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "flowpose/errors.hpp"

namespace flowpose {

namespace {

constexpr double kSmallAngle = 1e-6;
// Below this angle the V^-1 coefficient is taken from its series.
constexpr double kLogSeriesAngle = 1e-2;
constexpr double kLogCutoff = M_PI - 1e-6;
constexpr double kOrthoTol = 1e-9;
constexpr double kCheiralityEps = 1e-12;

// Coefficients of the closed-form exponential:
//   a = sin(t)/t, b = (1 - cos t)/t^2, c = (t - sin t)/t^3
struct RodriguesCoeffs {
  double a, b, c;
};

RodriguesCoeffs rodrigues(double theta) {
  const double t2 = theta * theta;
  if (theta < kSmallAngle) {
    const double t4 = t2 * t2;
    const double t6 = t4 * t2;
    return {1.0 - t2 / 6.0 + t4 / 120.0 - t6 / 5040.0,
            0.5 - t2 / 24.0 + t4 / 720.0 - t6 / 40320.0,
            1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0 - t6 / 362880.0};
  }
  const double s = std::sin(theta);
  // 1 - cos(t) = 2 sin^2(t/2) avoids cancellation for small t.
  const double h = std::sin(0.5 * theta);
  return {s / theta, 2.0 * h * h / t2, (theta - s) / (t2 * theta)};
}

}  // namespace

MotionVector::MotionVector(const Vector6d& xi) : xi_(xi) {
  if (!xi_.allFinite()) {
    throw InvalidArgument("motion vector has non-finite components");
  }
}

MotionVector::MotionVector(double vx, double vy, double vz, double wx, double wy, double wz)
    : MotionVector((Vector6d() << vx, vy, vz, wx, wy, wz).finished()) {}

TransformSE3::TransformSE3(const Eigen::Matrix4d& m) : m_(m) {
  if (!m_.allFinite()) {
    throw InvalidArgument("transform has non-finite entries");
  }
  const Eigen::Matrix3d R = m_.topLeftCorner<3, 3>();
  const double ortho = (R.transpose() * R - Eigen::Matrix3d::Identity()).norm();
  const double det = R.determinant();
  if (ortho > kOrthoTol || std::abs(det - 1.0) > kOrthoTol) {
    throw InvalidArgument(
        fmt::format("rotation block is not in SO(3) (|RtR - I| = {:.3e}, det = {:.12f})", ortho, det));
  }
  m_.row(3) << 0.0, 0.0, 0.0, 1.0;
}

TransformSE3::TransformSE3(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : TransformSE3([&] {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m.topLeftCorner<3, 3>() = rotation;
        m.topRightCorner<3, 1>() = translation;
        return m;
      }()) {}

namespace se3 {

const GeneratorSet& generators() {
  static const GeneratorSet kGenerators = [] {
    GeneratorSet g;
    for (auto& m : g) m.setZero();
    g[0](0, 3) = 1.0;
    g[1](1, 3) = 1.0;
    g[2](2, 3) = 1.0;
    // rotation about x
    g[3](1, 2) = -1.0;
    g[3](2, 1) = 1.0;
    // rotation about y
    g[4](0, 2) = 1.0;
    g[4](2, 0) = -1.0;
    // rotation about z
    g[5](0, 1) = -1.0;
    g[5](1, 0) = 1.0;
    return g;
  }();
  return kGenerators;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d s;
  s << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return s;
}

Eigen::Matrix4d hat(const MotionVector& xi) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  const auto& g = generators();
  for (int j = 0; j < 6; ++j) m += xi[j] * g[j];
  return m;
}

TransformSE3 exp(const MotionVector& xi) {
  const Eigen::Vector3d w = xi.rotation();
  const double theta = w.norm();
  const Eigen::Matrix3d W = skew(w);
  const Eigen::Matrix3d W2 = W * W;
  const auto k = rodrigues(theta);

  const Eigen::Matrix3d R = Eigen::Matrix3d::Identity() + k.a * W + k.b * W2;
  const Eigen::Matrix3d V = Eigen::Matrix3d::Identity() + k.b * W + k.c * W2;

  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = R;
  m.topRightCorner<3, 1>() = V * xi.translation();
  return TransformSE3(m);
}

MotionVector log(const TransformSE3& T) {
  const Eigen::Matrix3d R = T.rotation();
  const Eigen::Vector3d vee(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  const double sin_theta = 0.5 * vee.norm();
  const double cos_theta = std::clamp(0.5 * (R.trace() - 1.0), -1.0, 1.0);
  const double theta = std::atan2(sin_theta, cos_theta);

  if (theta >= kLogCutoff) {
    throw DomainError(fmt::format("log undefined near pi (rotation angle {:.9f} rad)", theta));
  }

  Eigen::Vector3d w;
  if (theta < kSmallAngle) {
    // theta / sin(theta) ~ 1 + theta^2/6
    w = 0.5 * (1.0 + theta * theta / 6.0) * vee;
  } else if (cos_theta > -0.99) {
    w = (0.5 * theta / sin_theta) * vee;
  } else {
    // Near pi the antisymmetric part vanishes; recover the axis from
    // R + R^T = 2 cos(t) I + 2 (1 - cos t) a a^T.
    const Eigen::Matrix3d aat =
        (R + R.transpose() - 2.0 * cos_theta * Eigen::Matrix3d::Identity()) / (2.0 * (1.0 - cos_theta));
    int col = 0;
    aat.diagonal().maxCoeff(&col);
    Eigen::Vector3d axis = aat.col(col) / std::sqrt(aat(col, col));
    axis.normalize();
    if (axis.dot(vee) < 0.0) axis = -axis;
    w = theta * axis;
  }

  const Eigen::Matrix3d W = skew(w);
  double d;
  if (theta < kLogSeriesAngle) {
    const double t2 = theta * theta;
    d = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0 + t2 * t2 * t2 / 1209600.0;
  } else {
    const auto k = rodrigues(theta);
    d = (1.0 - k.a / (2.0 * k.b)) / (theta * theta);
  }
  const Eigen::Matrix3d V_inv = Eigen::Matrix3d::Identity() - 0.5 * W + d * W * W;
  const Eigen::Vector3d v = V_inv * T.translation();

  Vector6d xi;
  xi << v, w;
  return MotionVector(xi);
}

InverseDepthPoint apply(const TransformSE3& T, const InverseDepthPoint& p) {
  const Eigen::Vector4d y = T.matrix() * p.homogeneous();
  if (!(y[2] > kCheiralityEps)) {
    throw CheiralityError(fmt::format("transformed point has third component {:.3e}", y[2]));
  }
  return {y[0] / y[2], y[1] / y[2], y[3] / y[2]};
}

TransformSE3 compose(const TransformSE3& a, const TransformSE3& b) {
  return TransformSE3(Eigen::Matrix4d(a.matrix() * b.matrix()));
}

TransformSE3 inverse(const TransformSE3& T) {
  const Eigen::Matrix3d Rt = T.rotation().transpose();
  return TransformSE3(Rt, -Rt * T.translation());
}

double rotation_angle(const TransformSE3& T) {
  return std::acos(std::clamp(0.5 * (T.rotation().trace() - 1.0), -1.0, 1.0));
}

}  // namespace se3
}  // namespace flowpose
