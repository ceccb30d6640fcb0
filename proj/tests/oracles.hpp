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

// Test-only reference computations. None of these call into the code path
// they are used to check.

#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "flowpose/lie_se3.hpp"
#include "flowpose/synth.hpp"

namespace flowpose::oracle {

/// hat(xi) assembled entry by entry, independent of se3::generators().
inline Eigen::Matrix4d hat(const Vector6d& xi) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m(0, 1) = -xi[5];
  m(0, 2) = xi[4];
  m(1, 0) = xi[5];
  m(1, 2) = -xi[3];
  m(2, 0) = -xi[4];
  m(2, 1) = xi[3];
  m(0, 3) = xi[0];
  m(1, 3) = xi[1];
  m(2, 3) = xi[2];
  return m;
}

/// Truncated power series sum_{k < terms} A^k / k!.
inline Eigen::Matrix4d series_expm(const Eigen::Matrix4d& A, int terms = 30) {
  Eigen::Matrix4d sum = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d term = Eigen::Matrix4d::Identity();
  for (int k = 1; k < terms; ++k) {
    term = term * A / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

/// Estimated flow (T x)_[u,v] - x_[u,v] with T from the series exponential.
inline Eigen::Vector2d estimated_flow(const Vector6d& xi, double u, double v, double q) {
  const Eigen::Vector4d y = series_expm(hat(xi)) * Eigen::Vector4d(u, v, 1.0, q);
  return {y[0] / y[2] - u, y[1] / y[2] - v};
}

/// Central-difference Jacobian of estimated_flow at xi = 0.
inline Eigen::Matrix<double, 2, 6> flow_jacobian_fd(double u, double v, double q, double h = 1e-6) {
  Eigen::Matrix<double, 2, 6> J;
  for (int j = 0; j < 6; ++j) {
    Vector6d e = Vector6d::Zero();
    e[j] = h;
    J.col(j) = (estimated_flow(e, u, v, q) - estimated_flow(-e, u, v, q)) / (2.0 * h);
  }
  return J;
}

/// Rotation aligning centred est onto centred gt by Horn's unit-quaternion
/// method (eigenvector of the 4x4 symmetric matrix).
inline Eigen::Matrix3d horn_rotation(const std::vector<Eigen::Vector3d>& est, const std::vector<Eigen::Vector3d>& gt) {
  Eigen::Vector3d me = Eigen::Vector3d::Zero();
  Eigen::Vector3d mg = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) {
    me += est[i];
    mg += gt[i];
  }
  me /= static_cast<double>(est.size());
  mg /= static_cast<double>(gt.size());
  Eigen::Matrix3d S = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) S += (est[i] - me) * (gt[i] - mg).transpose();
  const double sxx = S(0, 0), sxy = S(0, 1), sxz = S(0, 2);
  const double syx = S(1, 0), syy = S(1, 1), syz = S(1, 2);
  const double szx = S(2, 0), szy = S(2, 1), szz = S(2, 2);
  Eigen::Matrix4d N;
  N << sxx + syy + szz, syz - szy, szx - sxz, sxy - syx,
       syz - szy, sxx - syy - szz, sxy + syx, szx + sxz,
       szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy,
       sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(N);
  const Eigen::Vector4d q = eig.eigenvectors().col(3);
  return Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized().toRotationMatrix();
}

/// Random motion vector with norm exactly `norm`.
inline Vector6d random_motion(SplitMix64& rng, double norm) {
  Vector6d v;
  for (int i = 0; i < 6; ++i) v[i] = rng.uniform(-1.0, 1.0);
  return v * (norm / v.norm());
}

inline Eigen::Matrix3d random_rotation(SplitMix64& rng) {
  Eigen::Quaterniond q(rng.gaussian(), rng.gaussian(), rng.gaussian(), rng.gaussian());
  return q.normalized().toRotationMatrix();
}

}  // namespace flowpose::oracle
