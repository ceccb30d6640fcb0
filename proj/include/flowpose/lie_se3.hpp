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

// SE(3) / se(3) machinery on inverse-depth homogeneous points.
//
// Motion vectors are ordered (v_x, v_y, v_z, w_x, w_y, w_z): translation
// first, then rotation about x, y and z. The same ordering indexes the
// generator set and the columns of the flow Jacobian.

#pragma once

#include <array>

#include <Eigen/Core>

namespace flowpose {

using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Element of se(3). Components are always finite.
class MotionVector {
 public:
  MotionVector() : xi_(Vector6d::Zero()) {}
  explicit MotionVector(const Vector6d& xi);
  MotionVector(double vx, double vy, double vz, double wx, double wy, double wz);

  const Vector6d& vector() const { return xi_; }
  double operator[](int i) const { return xi_[i]; }
  Eigen::Vector3d translation() const { return xi_.head<3>(); }
  Eigen::Vector3d rotation() const { return xi_.tail<3>(); }
  double norm() const { return xi_.norm(); }

  MotionVector operator+(const MotionVector& o) const { return MotionVector(xi_ + o.xi_); }
  MotionVector operator-(const MotionVector& o) const { return MotionVector(xi_ - o.xi_); }
  MotionVector operator-() const { return MotionVector(-xi_); }

 private:
  Vector6d xi_;
};

/// Rigid transform [R t; 0 1]. Construction checks orthonormality and
/// det(R) = 1 to 1e-9 and forces the bottom row to (0, 0, 0, 1).
class TransformSE3 {
 public:
  TransformSE3() : m_(Eigen::Matrix4d::Identity()) {}
  explicit TransformSE3(const Eigen::Matrix4d& m);
  TransformSE3(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static TransformSE3 identity() { return TransformSE3(); }

  const Eigen::Matrix4d& matrix() const { return m_; }
  Eigen::Matrix3d rotation() const { return m_.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return m_.topRightCorner<3, 1>(); }

  /// Rigid action on a Euclidean point.
  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const {
    return rotation() * p + translation();
  }

 private:
  Eigen::Matrix4d m_;
};

/// Homogeneous inverse-depth point (u, v, 1, q) in normalised camera
/// coordinates, q = 1 / depth. q = 0 denotes a point at infinity.
struct InverseDepthPoint {
  double u = 0.0;
  double v = 0.0;
  double q = 1.0;

  Eigen::Vector4d homogeneous() const { return {u, v, 1.0, q}; }
  bool at_infinity() const { return q == 0.0; }
};

using GeneratorSet = std::array<Eigen::Matrix4d, 6>;

namespace se3 {

/// The six constant basis matrices of se(3), in motion-vector order.
const GeneratorSet& generators();

/// sum_j xi_j G_j.
Eigen::Matrix4d hat(const MotionVector& xi);

/// Matrix exponential of hat(xi), closed form with a Taylor fallback for
/// rotation magnitudes below 1e-6.
TransformSE3 exp(const MotionVector& xi);

/// Inverse of exp. Throws DomainError when the rotation angle is at or
/// beyond pi - 1e-6.
MotionVector log(const TransformSE3& T);

/// T * (u, v, 1, q), renormalised so the third component is 1. Throws
/// CheiralityError when the transformed third component is <= 1e-12.
InverseDepthPoint apply(const TransformSE3& T, const InverseDepthPoint& p);

TransformSE3 compose(const TransformSE3& a, const TransformSE3& b);
TransformSE3 inverse(const TransformSE3& T);

/// Rotation angle of T in radians, from the trace with the arccos argument
/// clamped to [-1, 1].
double rotation_angle(const TransformSE3& T);

Eigen::Matrix3d skew(const Eigen::Vector3d& w);

}  // namespace se3
}  // namespace flowpose
