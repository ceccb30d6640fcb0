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

#include "flowpose/irls_solver.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "flowpose/errors.hpp"
#include "flowpose/info_matrix.hpp"

namespace flowpose {

using Matrix6d = Eigen::Matrix<double, 6, 6>;

void SolverConfig::validate() const {
  if (max_iterations < 1) throw InvalidArgument(fmt::format("max_iterations must be >= 1, got {}", max_iterations));
  if (!(convergence_tol > 0.0)) {
    throw InvalidArgument(fmt::format("convergence_tol must be > 0, got {}", convergence_tol));
  }
  if (!(damping >= 0.0)) throw InvalidArgument(fmt::format("damping must be >= 0, got {}", damping));
  if (min_valid_pixels < 0) throw InvalidArgument("min_valid_pixels must be >= 0");
}

namespace irls {

namespace {

// One usable pixel: its inverse-depth point, the measured flow in
// normalised units and the information block rescaled to normalised units.
struct Observation {
  int x, y;
  InverseDepthPoint point;
  Eigen::Vector2d flow;
  double cx, cy, cxy;
};

// A pixel's state at the current motion estimate.
struct Linearisation {
  const Observation* obs;
  InverseDepthPoint moved;
  Eigen::Vector2d r;
};

std::vector<Observation> gather(const DepthMap& depth, const FlowField& flow, const Intrinsics& K,
                                const SolverConfig& config) {
  if (depth.width() != flow.width() || depth.height() != flow.height() || depth.width() != K.width ||
      depth.height() != K.height) {
    throw InvalidArgument(fmt::format("solver inputs disagree: depth {}x{}, flow {}x{}, intrinsics {}x{}",
                                      depth.width(), depth.height(), flow.width(), flow.height(), K.width,
                                      K.height));
  }
  std::vector<Observation> out;
  out.reserve(static_cast<std::size_t>(depth.width()) * depth.height());
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.valid(x, y) || !flow.valid(x, y)) continue;
      const double q = 1.0 / depth.at(x, y);
      if (q < kMinInverseDepth || q > kMaxInverseDepth) continue;
      const Eigen::Vector2d uv = camera::pixel_to_normalised({x, y}, K);
      Observation o{x, y, {uv.x(), uv.y(), q}, {flow.flow.at(x, y, 0) / K.fx, flow.flow.at(x, y, 1) / K.fy},
                    1.0, 1.0, 0.0};
      if (!o.flow.allFinite()) continue;
      if (config.use_confidence) {
        const InfoMatrix m = info::build(info::params_at(flow, x, y));
        o.cx = m.cx * K.fx * K.fx;
        o.cy = m.cy * K.fy * K.fy;
        o.cxy = m.cxy * K.fx * K.fy;
      }
      out.push_back(o);
    }
  }
  return out;
}

Eigen::Matrix2d weight_for(const Observation& o, const Eigen::Vector2d& r, double m, const SolverConfig& config) {
  if (!config.full_info_block) return build_weight(o.cx, o.cy, r, m);
  const Eigen::Matrix2d robust = build_weight(1.0, 1.0, r, m);
  const Eigen::Vector2d s(std::sqrt(robust(0, 0)), std::sqrt(robust(1, 1)));
  Eigen::Matrix2d w;
  w << o.cx * s.x() * s.x(), o.cxy * s.x() * s.y(), o.cxy * s.x() * s.y(), o.cy * s.y() * s.y();
  return w;
}

struct Evaluation {
  std::vector<Linearisation> lin;
  double m = 0.0;
};

Evaluation evaluate(const std::vector<Observation>& obs, const MotionVector& xi) {
  const TransformSE3 T = se3::exp(xi);
  Evaluation e;
  e.lin.reserve(obs.size());
  double sum = 0.0;
  for (const auto& o : obs) {
    InverseDepthPoint moved;
    try {
      moved = se3::apply(T, o.point);
    } catch (const CheiralityError&) {
      continue;
    }
    const Eigen::Vector2d estimated(moved.u - o.point.u, moved.v - o.point.v);
    const Eigen::Vector2d r = estimated - o.flow;
    sum += r.norm();
    e.lin.push_back({&o, moved, r});
  }
  e.m = e.lin.empty() ? 0.0 : sum / static_cast<double>(e.lin.size());
  return e;
}

void require_enough(std::size_t n, const SolverConfig& config) {
  if (n < static_cast<std::size_t>(config.min_valid_pixels)) {
    throw InsufficientData(fmt::format("{} valid pixels, need at least {}", n, config.min_valid_pixels));
  }
}

ResidualReport make_report(const Evaluation& e, int width, int height, const SolverConfig& config) {
  ResidualReport rep;
  rep.residuals = Raster(width, height, 2, std::numeric_limits<double>::quiet_NaN());
  rep.m = e.m;
  rep.valid_count = e.lin.size();
  for (const auto& l : e.lin) {
    rep.residuals.at(l.obs->x, l.obs->y, 0) = l.r.x();
    rep.residuals.at(l.obs->x, l.obs->y, 1) = l.r.y();
    rep.weighted_cost += l.r.dot(weight_for(*l.obs, l.r, e.m, config) * l.r);
  }
  return rep;
}

}  // namespace

Matrix26d jacobian_row(const InverseDepthPoint& p) {
  const double u = p.u;
  const double v = p.v;
  const double q = p.q;
  Matrix26d J;
  J << q, 0.0, -u * q, -u * v, u * u + 1.0, -v,
       0.0, q, -v * q, -v * v - 1.0, u * v, u;
  return J;
}

Eigen::Matrix2d build_weight(double conf_x, double conf_y, const Eigen::Vector2d& r, double m) {
  Eigen::Matrix2d w = Eigen::Matrix2d::Zero();
  if (m == 0.0) {
    w(0, 0) = conf_x;
    w(1, 1) = conf_y;
    return w;
  }
  const double m2 = m * m;
  w(0, 0) = conf_x * m2 / (m2 + r.x() * r.x());
  w(1, 1) = conf_y * m2 / (m2 + r.y() * r.y());
  return w;
}

ResidualReport compute_residuals(const DepthMap& depth, const FlowField& flow, const MotionVector& xi,
                                 const Intrinsics& K, const SolverConfig& config) {
  const auto obs = gather(depth, flow, K, config);
  const auto e = evaluate(obs, xi);
  require_enough(e.lin.size(), config);
  return make_report(e, depth.width(), depth.height(), config);
}

StepResult gauss_newton_step(const DepthMap& depth, const FlowField& flow, const MotionVector& xi,
                             const Intrinsics& K, const SolverConfig& config) {
  const auto obs = gather(depth, flow, K, config);
  const auto e = evaluate(obs, xi);
  require_enough(e.lin.size(), config);

  Matrix6d H = Matrix6d::Zero();
  Vector6d g = Vector6d::Zero();
  for (const auto& l : e.lin) {
    // Linearise about the currently transformed point.
    const Matrix26d J = jacobian_row(l.moved);
    const Eigen::Matrix2d W = weight_for(*l.obs, l.r, e.m, config);
    const Eigen::Matrix<double, 6, 2> JtW = J.transpose() * W;
    H.noalias() += JtW * J;
    g.noalias() += JtW * l.r;
  }
  H.diagonal().array() += config.damping;

  const Eigen::SelfAdjointEigenSolver<Matrix6d> eig(H, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()[0];
  const double hi = eig.eigenvalues()[5];
  if (!(lo > 0.0) || !std::isfinite(hi) || hi / lo > kMaxCondition) {
    throw DegenerateGeometry(fmt::format("normal matrix is degenerate (eigenvalues {:.3e} .. {:.3e})", lo, hi));
  }
  const Vector6d beta = -H.ldlt().solve(g);
  return {MotionVector(beta), make_report(e, depth.width(), depth.height(), config)};
}

SolveResult solve(const DepthMap& depth, const FlowField& flow, const Intrinsics& K, const SolverConfig& config) {
  config.validate();
  SolveResult out;
  MotionVector xi = config.seed_xi;
  for (int it = 1; it <= config.max_iterations; ++it) {
    const StepResult step = gauss_newton_step(depth, flow, xi, K, config);
    out.per_iteration_costs.push_back(step.report.weighted_cost);
    xi = xi + step.beta;
    out.iterations = it;
    if (step.beta.norm() < config.convergence_tol) {
      out.converged = true;
      break;
    }
    if (config.single_iteration) break;
  }
  out.xi = xi;
  out.final_cost = compute_residuals(depth, flow, xi, K, config).weighted_cost;
  return out;
}

}  // namespace irls
}  // namespace flowpose
