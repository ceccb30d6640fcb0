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

// Confidence-weighted iteratively reweighted Gauss-Newton estimation of the
// relative motion xi from a depth map of frame 1 and a dense flow field
// 1 -> 2.
//
// For each valid pixel the inverse-depth point x = (u, v, 1, 1/D) gives an
// estimated flow F+ = (exp(xi) x)_[u,v] - x_[u,v]. The residual against the
// measured flow F (normalised units) is r = F+ - F and the per-pixel weight is
//
//   W = diag(C_x m^2 / (m^2 + r_x^2), C_y m^2 / (m^2 + r_y^2))
//
// with m the mean residual magnitude of the image, recomputed every
// iteration. The motion is updated additively: xi <- xi + beta with
// beta = -(J^T W J)^-1 J^T W r.

#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "flowpose/camera.hpp"
#include "flowpose/lie_se3.hpp"
#include "flowpose/raster.hpp"

namespace flowpose {

struct SolverConfig {
  int max_iterations = 20;
  double convergence_tol = 1e-9;  // on |beta|
  int min_valid_pixels = 64;
  bool use_confidence = true;
  bool single_iteration = false;
  double damping = 0.0;  // added to the normal-matrix diagonal
  MotionVector seed_xi;
  // Weight with the full 2x2 information block instead of its diagonal.
  bool full_info_block = false;

  /// Throws InvalidArgument when max_iterations < 1 or convergence_tol <= 0.
  void validate() const;
};

struct ResidualReport {
  Raster residuals;  // 2 channels, normalised units, NaN where invalid
  double m = 0.0;    // mean residual magnitude
  double weighted_cost = 0.0;
  std::size_t valid_count = 0;
};

struct SolveResult {
  MotionVector xi;
  int iterations = 0;
  bool converged = false;
  double final_cost = 0.0;
  std::vector<double> per_iteration_costs;
};

struct StepResult {
  MotionVector beta;
  ResidualReport report;
};

using Matrix26d = Eigen::Matrix<double, 2, 6>;

namespace irls {

/// Inverse depths outside this range are masked out.
inline constexpr double kMinInverseDepth = 1e-4;
inline constexpr double kMaxInverseDepth = 1e4;
/// Normal matrices with an eigenvalue ratio above this are rejected.
inline constexpr double kMaxCondition = 1e12;

/// d (exp(xi) p)_[u,v] / d xi at xi = 0.
Matrix26d jacobian_row(const InverseDepthPoint& p);

/// Diagonal robust weight. m = 0 yields the confidences themselves.
Eigen::Matrix2d build_weight(double conf_x, double conf_y, const Eigen::Vector2d& r, double m);

/// Residuals and weighted cost at xi. Throws InsufficientData when fewer than
/// config.min_valid_pixels pixels are usable.
ResidualReport compute_residuals(const DepthMap& depth, const FlowField& flow, const MotionVector& xi,
                                 const Intrinsics& K, const SolverConfig& config = {});

/// One reweighted Gauss-Newton step from xi. Throws DegenerateGeometry when the
/// normal matrix is singular or its condition estimate exceeds kMaxCondition.
StepResult gauss_newton_step(const DepthMap& depth, const FlowField& flow, const MotionVector& xi,
                             const Intrinsics& K, const SolverConfig& config = {});

/// Iterates gauss_newton_step from config.seed_xi until |beta| < tol, the
/// iteration budget is spent, or after one step when single_iteration is set.
SolveResult solve(const DepthMap& depth, const FlowField& flow, const Intrinsics& K,
                  const SolverConfig& config = {});

}  // namespace irls
}  // namespace flowpose
