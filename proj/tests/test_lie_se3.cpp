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

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "flowpose/errors.hpp"
#include "flowpose/lie_se3.hpp"
#include "oracles.hpp"

using namespace flowpose;

namespace {

Vector6d random_xi(SplitMix64& rng, double max_rot, double max_trans) {
  Eigen::Vector3d w(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  w = w.normalized() * rng.uniform(0.0, max_rot);
  Vector6d xi;
  xi << rng.uniform(-max_trans, max_trans), rng.uniform(-max_trans, max_trans), rng.uniform(-max_trans, max_trans), w;
  return xi;
}

}  // namespace

TEST_CASE("generators have the documented structure") {
  const auto& g = se3::generators();
  Eigen::Matrix4d t0 = Eigen::Matrix4d::Zero();
  t0(0, 3) = 1.0;
  CHECK(g[0] == t0);

  Eigen::Matrix4d r5 = Eigen::Matrix4d::Zero();
  r5(0, 1) = -1.0;
  r5(1, 0) = 1.0;
  CHECK(g[5] == r5);

  for (int j = 0; j < 3; ++j) {
    CHECK(g[j].cwiseAbs().sum() == 1.0);
    CHECK(g[j](j, 3) == 1.0);
  }
  for (int j = 3; j < 6; ++j) {
    const Eigen::Matrix3d b = g[j].topLeftCorner<3, 3>();
    CHECK((b + b.transpose()).norm() == 0.0);
    CHECK(g[j].col(3).norm() == 0.0);
    CHECK(g[j].row(3).norm() == 0.0);
  }
  CHECK(se3::hat(MotionVector()).norm() == 0.0);
  CHECK(&se3::generators() == &g);
}

TEST_CASE("exp closed-form cases") {
  CHECK(se3::exp(MotionVector()).matrix() == Eigen::Matrix4d::Identity());

  const TransformSE3 T = se3::exp(MotionVector(0.1, 0, 0, 0, 0, 0));
  CHECK(T.rotation().isIdentity(0.0));
  CHECK(T.translation().isApprox(Eigen::Vector3d(0.1, 0, 0)));

  CHECK_THROWS_AS(MotionVector(std::numeric_limits<double>::quiet_NaN(), 0, 0, 0, 0, 0), InvalidArgument);
  CHECK_THROWS_AS(MotionVector(0, 0, 0, std::numeric_limits<double>::infinity(), 0, 0), InvalidArgument);
}

TEST_CASE("exp matches the 30-term power series") {
  SplitMix64 rng(1);
  for (int i = 0; i < 500; ++i) {
    const Vector6d xi = random_xi(rng, std::numbers::pi - 0.1, 1.0);
    const Eigen::Matrix4d expected = oracle::series_expm(oracle::hat(xi));
    const Eigen::Matrix4d got = se3::exp(MotionVector(xi)).matrix();
    REQUIRE((got - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
  // Small-angle branch.
  for (int i = 0; i < 100; ++i) {
    const Vector6d xi = random_xi(rng, 1e-6, 1.0);
    const Eigen::Matrix4d expected = oracle::series_expm(oracle::hat(xi));
    REQUIRE((se3::exp(MotionVector(xi)).matrix() - expected).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("exp lands in SE(3) for |xi| <= 2") {
  SplitMix64 rng(2);
  for (int i = 0; i < 10000; ++i) {
    Vector6d xi = oracle::random_motion(rng, rng.uniform(0.0, 2.0));
    const TransformSE3 T = se3::exp(MotionVector(xi));
    const Eigen::Matrix3d R = T.rotation();
    REQUIRE((R.transpose() * R - Eigen::Matrix3d::Identity()).norm() < 1e-9);
    REQUIRE(std::abs(R.determinant() - 1.0) < 1e-9);
    REQUIRE(T.matrix().row(3) == Eigen::RowVector4d(0, 0, 0, 1));
    const TransformSE3 round = se3::compose(T, se3::exp(MotionVector(-xi)));
    REQUIRE((round.matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("log examples") {
  CHECK(se3::log(TransformSE3::identity()).norm() == 0.0);

  const MotionVector xi(0.02, -0.01, 0.03, 0.01, -0.02, 0.015);
  CHECK((se3::log(se3::exp(xi)) - xi).norm() < 1e-10);

  const Eigen::Matrix3d Rz = Eigen::AngleAxisd(std::numbers::pi / 2, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const MotionVector w = se3::log(TransformSE3(Rz, Eigen::Vector3d::Zero()));
  CHECK((w.vector() - (Vector6d() << 0, 0, 0, 0, 0, std::numbers::pi / 2).finished()).norm() < 1e-9);
}

TEST_CASE("log rejects rotations at the branch cut") {
  const Eigen::Matrix3d Rpi = Eigen::AngleAxisd(std::numbers::pi, Eigen::Vector3d::UnitX()).toRotationMatrix();
  CHECK_THROWS_AS(se3::log(TransformSE3(Rpi, Eigen::Vector3d::Zero())), DomainError);
  const Eigen::Matrix3d Rnear =
      Eigen::AngleAxisd(std::numbers::pi - 1e-3, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  const MotionVector w = se3::log(TransformSE3(Rnear, Eigen::Vector3d(0.1, 0.2, 0.3)));
  CHECK(w.rotation().norm() == doctest::Approx(std::numbers::pi - 1e-3).epsilon(1e-9));
  CHECK((se3::exp(w).matrix() - TransformSE3(Rnear, Eigen::Vector3d(0.1, 0.2, 0.3)).matrix()).cwiseAbs().maxCoeff() <
        1e-9);
}

TEST_CASE("log inverts exp on the sampled domain") {
  SplitMix64 rng(3);
  for (int i = 0; i < 10000; ++i) {
    const Vector6d xi = random_xi(rng, std::numbers::pi - 0.1, 1.0);
    const MotionVector back = se3::log(se3::exp(MotionVector(xi)));
    REQUIRE((back.vector() - xi).norm() < 1e-9);
  }
}

TEST_CASE("apply is a renormalised matrix-vector product") {
  const InverseDepthPoint p{0.3, -0.2, 0.5};
  const InverseDepthPoint same = se3::apply(TransformSE3::identity(), p);
  CHECK(same.u == p.u);
  CHECK(same.v == p.v);
  CHECK(same.q == p.q);

  const InverseDepthPoint moved = se3::apply(se3::exp(MotionVector(0.1, 0, 0, 0, 0, 0)), {0, 0, 1});
  CHECK(moved.u == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(moved.v == 0.0);
  CHECK(moved.q == 1.0);

  SplitMix64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    const Vector6d xi = random_xi(rng, 0.5, 0.2);
    const InverseDepthPoint x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.1, 2.0)};
    const Eigen::Matrix4d M = oracle::series_expm(oracle::hat(xi));
    Eigen::Vector4d y = Eigen::Vector4d::Zero();
    const double h[4] = {x.u, x.v, 1.0, x.q};
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) y[r] += M(r, c) * h[c];
    const InverseDepthPoint got = se3::apply(se3::exp(MotionVector(xi)), x);
    REQUIRE(std::abs(got.u - y[0] / y[2]) < 1e-12);
    REQUIRE(std::abs(got.v - y[1] / y[2]) < 1e-12);
    REQUIRE(std::abs(got.q - y[3] / y[2]) < 1e-12);
  }
}

TEST_CASE("apply is linear before renormalisation") {
  SplitMix64 rng(5);
  const TransformSE3 T = se3::exp(MotionVector(random_xi(rng, 0.3, 0.2)));
  const InverseDepthPoint a{0.1, 0.2, 0.5};
  const InverseDepthPoint b{-0.3, 0.1, 2.0};
  const Eigen::Vector4d sum = T.matrix() * (a.homogeneous() + b.homogeneous());
  const Eigen::Vector4d parts = T.matrix() * a.homogeneous() + T.matrix() * b.homogeneous();
  CHECK((sum - parts).norm() < 1e-15);
}

TEST_CASE("apply detects points behind the camera") {
  const TransformSE3 back(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0, 0, -2.0));
  CHECK_THROWS_AS(se3::apply(back, {0.0, 0.0, 1.0}), CheiralityError);
  CHECK_THROWS_AS(se3::apply(back, {0.0, 0.0, 0.5}), CheiralityError);
}

TEST_CASE("compose and inverse") {
  SplitMix64 rng(6);
  const TransformSE3 T = se3::exp(MotionVector(random_xi(rng, 1.0, 1.0)));
  CHECK(se3::compose(TransformSE3::identity(), T).matrix() == T.matrix());
  CHECK(se3::inverse(TransformSE3::identity()).matrix() == Eigen::Matrix4d::Identity());
  for (int i = 0; i < 1000; ++i) {
    const TransformSE3 A = se3::exp(MotionVector(random_xi(rng, 3.0, 2.0)));
    REQUIRE((se3::compose(A, se3::inverse(A)).matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE((se3::compose(se3::inverse(A), A).matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("transform construction validates SO(3)") {
  Eigen::Matrix4d bad = Eigen::Matrix4d::Identity();
  bad(0, 0) = 1.1;
  CHECK_THROWS_AS(TransformSE3{bad}, InvalidArgument);
  Eigen::Matrix4d reflect = Eigen::Matrix4d::Identity();
  reflect(2, 2) = -1.0;
  CHECK_THROWS_AS(TransformSE3{reflect}, InvalidArgument);
}

TEST_CASE("generators are the derivatives of exp at zero") {
  const auto& g = se3::generators();
  const double h = 1e-6;
  for (int j = 0; j < 6; ++j) {
    Vector6d e = Vector6d::Zero();
    e[j] = h;
    const Eigen::Matrix4d d = (se3::exp(MotionVector(e)).matrix() - se3::exp(MotionVector(-e)).matrix()) / (2 * h);
    CHECK((d - g[j]).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("rotation angle") {
  const Eigen::Matrix3d R = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 1, 0).normalized()).toRotationMatrix();
  CHECK(se3::rotation_angle(TransformSE3(R, Eigen::Vector3d::Zero())) == doctest::Approx(0.7).epsilon(1e-12));
}
