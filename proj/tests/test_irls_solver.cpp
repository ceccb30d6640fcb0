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

#include "flowpose/errors.hpp"
#include "flowpose/irls_solver.hpp"
#include "flowpose/synth.hpp"
#include "oracles.hpp"

using namespace flowpose;

namespace {

Scene scene_for(const MotionVector& xi, DepthModel depth = ConstantDepth{2.0}) {
  SceneSpec spec;
  spec.depth_model = depth;
  spec.motion = xi;
  return synth::render(spec);
}

const Intrinsics& default_k() {
  static const Intrinsics k = SceneSpec{}.intrinsics;
  return k;
}

}  // namespace

TEST_SUITE("irls_solver") {
  TEST_CASE("jacobian matches finite differences of the estimated flow") {
    SplitMix64 rng(40);
    for (int i = 0; i < 1000; ++i) {
      const double u = rng.uniform(-1, 1), v = rng.uniform(-1, 1), q = rng.uniform(0.1, 10.0);
      const Matrix26d J = irls::jacobian_row({u, v, q});
      const Matrix26d fd = oracle::flow_jacobian_fd(u, v, q);
      REQUIRE((J - fd).norm() <= 1e-6 * J.norm());
    }
    const Matrix26d J0 = irls::jacobian_row({0.0, 0.0, 0.5});
    CHECK(J0.row(0) == (Eigen::Matrix<double, 1, 6>() << 0.5, 0, 0, 0, 1, 0).finished());
    CHECK(J0.row(1) == (Eigen::Matrix<double, 1, 6>() << 0, 0.5, 0, -1, 0, 0).finished());
  }

  TEST_CASE("weight matrix") {
    const Eigen::Vector2d r(1.0, 0.0);
    const Eigen::Matrix2d w = irls::build_weight(4.0, 2.0, r, 1.0);
    CHECK(w(0, 0) == 2.0);
    CHECK(w(1, 1) == 2.0);
    CHECK(w(0, 1) == 0.0);
    CHECK(w(1, 0) == 0.0);
    const Eigen::Matrix2d w0 = irls::build_weight(3.0, 5.0, {7.0, -2.0}, 0.0);
    CHECK(w0(0, 0) == 3.0);
    CHECK(w0(1, 1) == 5.0);
    const Eigen::Matrix2d far = irls::build_weight(1.0, 1.0, {1e6, 1e6}, 1.0);
    CHECK(far(0, 0) < 1e-11);
  }

  TEST_CASE("config validation") {
    SolverConfig c;
    CHECK_NOTHROW(c.validate());
    c.max_iterations = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.convergence_tol = 0.0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.damping = -1.0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
  }

  TEST_CASE("one step recovers a fronto-parallel translation") {
    const MotionVector truth(0.05, -0.02, 0, 0, 0, 0);
    const Scene s = scene_for(truth);
    SolverConfig c;
    c.single_iteration = true;
    const SolveResult r = irls::solve(s.depth, s.flow, default_k(), c);
    CHECK(r.iterations == 1);
    CHECK((r.xi - truth).norm() < 1e-7);
  }

  TEST_CASE("small rotation about the optical axis converges quickly") {
    const MotionVector truth(0, 0, 0, 0, 0, 0.01);
    const Scene s = scene_for(truth);
    const SolveResult r = irls::solve(s.depth, s.flow, default_k());
    CHECK(r.converged);
    CHECK(r.iterations <= 4);
    CHECK((r.xi - truth).norm() < 1e-9);
    CHECK(r.final_cost < 1e-20);
    REQUIRE(r.per_iteration_costs.size() == static_cast<std::size_t>(r.iterations));
    CHECK(r.per_iteration_costs.back() <= r.per_iteration_costs.front());
  }

  TEST_CASE("noiseless recovery over depth models") {
    SplitMix64 rng(41);
    const DepthModel models[] = {ConstantDepth{3.0}, PlaneDepth{Eigen::Vector3d(0.2, -0.1, 1.0), 2.0},
                                 SmoothRandomDepth{5, 0.7}};
    for (const auto& model : models) {
      for (int i = 0; i < 3; ++i) {
        const MotionVector truth(oracle::random_motion(rng, rng.uniform(0.01, 0.1)));
        const Scene s = scene_for(truth, model);
        const SolveResult r = irls::solve(s.depth, s.flow, default_k());
        CHECK(r.converged);
        CHECK(r.iterations <= 10);
        CHECK((r.xi - truth).norm() < 1e-8);
      }
    }
  }

  TEST_CASE("uniform confidence scaling leaves the solution unchanged") {
    SceneSpec spec;
    spec.depth_model = SmoothRandomDepth{9, 0.4};
    spec.motion = MotionVector(0.03, 0.01, -0.02, 0.01, -0.02, 0.005);
    spec.noise_sigma = 0.3;
    spec.seed = 3;
    const Scene s = synth::render(spec);
    FlowField scaled = s.flow;
    const double log_k = std::log(37.0);
    for (int y = 0; y < scaled.height(); ++y)
      for (int x = 0; x < scaled.width(); ++x) {
        scaled.info.at(x, y, 0) += log_k;
        scaled.info.at(x, y, 2) += log_k;
      }
    const SolveResult a = irls::solve(s.depth, s.flow, spec.intrinsics);
    const SolveResult b = irls::solve(s.depth, scaled, spec.intrinsics);
    CHECK((a.xi - b.xi).norm() < 1e-12);
    CHECK(a.iterations == b.iterations);
  }

  TEST_CASE("the fixed point does not depend on the seed") {
    const MotionVector truth(0.02, 0.03, -0.01, -0.01, 0.02, 0.01);
    const Scene s = scene_for(truth, SmoothRandomDepth{2, 0.5});
    SplitMix64 rng(42);
    for (int i = 0; i < 5; ++i) {
      SolverConfig c;
      c.seed_xi = truth + MotionVector(oracle::random_motion(rng, 0.02));
      const SolveResult r = irls::solve(s.depth, s.flow, default_k(), c);
      CHECK(r.converged);
      CHECK((r.xi - truth).norm() < 1e-9);
    }
  }

  TEST_CASE("iterating beats a single step on rotation-dominant motion") {
    const MotionVector truth(0.005, 0, 0, 0.04, -0.06, 0.05);
    const Scene s = scene_for(truth, SmoothRandomDepth{4, 0.5});
    SolverConfig one;
    one.single_iteration = true;
    const double e1 = (irls::solve(s.depth, s.flow, default_k(), one).xi - truth).norm();
    const double en = (irls::solve(s.depth, s.flow, default_k()).xi - truth).norm();
    CHECK(en < e1);
    CHECK(e1 > 1e-6);
  }

  TEST_CASE("confidence weighting suppresses tagged outliers") {
    SceneSpec spec;
    spec.depth_model = SmoothRandomDepth{11, 0.5};
    spec.motion = MotionVector(0.02, -0.03, 0.01, 0.02, 0.01, -0.01);
    spec.outlier_fraction = 0.2;
    spec.seed = 8;
    const Scene s = synth::render(spec);
    SolverConfig off;
    off.use_confidence = false;
    const double with = (irls::solve(s.depth, s.flow, spec.intrinsics).xi - spec.motion).norm();
    const double without = (irls::solve(s.depth, s.flow, spec.intrinsics, off).xi - spec.motion).norm();
    CHECK(with * 10.0 < without);
  }

  TEST_CASE("full information block agrees with the diagonal when uncorrelated") {
    const MotionVector truth(0.01, 0.02, 0.03, -0.01, 0.0, 0.02);
    const Scene s = scene_for(truth);
    SolverConfig full;
    full.full_info_block = true;
    const SolveResult a = irls::solve(s.depth, s.flow, default_k());
    const SolveResult b = irls::solve(s.depth, s.flow, default_k(), full);
    CHECK((a.xi - b.xi).norm() < 1e-12);
  }

  TEST_CASE("residual report") {
    const MotionVector truth(0.01, 0, 0, 0, 0, 0);
    Scene s = scene_for(truth);
    s.flow.set_valid(0, 0, false);
    const ResidualReport rep = irls::compute_residuals(s.depth, s.flow, truth, default_k());
    CHECK(std::isnan(rep.residuals.at(0, 0, 0)));
    CHECK(rep.valid_count == s.flow.valid_count());
    CHECK(rep.m < 1e-12);
    const ResidualReport off = irls::compute_residuals(s.depth, s.flow, MotionVector(), default_k());
    CHECK(off.m > 1e-3);
  }

  TEST_CASE("error conditions") {
    const Scene s = scene_for(MotionVector(0.01, 0, 0, 0, 0, 0));
    SolverConfig c;
    c.min_valid_pixels = static_cast<int>(s.flow.valid_count()) + 1;
    CHECK_THROWS_AS(irls::solve(s.depth, s.flow, default_k(), c), InsufficientData);

    FlowField one = s.flow;
    for (int y = 0; y < one.height(); ++y)
      for (int x = 0; x < one.width(); ++x) one.set_valid(x, y, x == 10 && y == 10);
    c.min_valid_pixels = 0;
    CHECK_THROWS_AS(irls::solve(s.depth, one, default_k(), c), DegenerateGeometry);

    // Points at (effectively) infinite depth carry no translation information.
    const DepthMap far(s.depth.width(), s.depth.height(), 1e5);
    CHECK_THROWS_AS(irls::solve(far, s.flow, default_k()), InsufficientData);

    CHECK_THROWS_AS(irls::solve(DepthMap(4, 4, 1.0), s.flow, default_k()), InvalidArgument);
  }
}
