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

#include "flowpose/info_matrix.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "flowpose/errors.hpp"

namespace flowpose {

InfoMatrix InfoMatrix::from_entries(double cx, double cy, double cxy) {
  const double det = cx * cy - cxy * cxy;
  if (!(std::isfinite(cx) && std::isfinite(cy) && std::isfinite(cxy)) || !(cx > 0.0) || !(cy > 0.0) ||
      !(det > 0.0)) {
    throw InvalidArgument(fmt::format("information matrix [[{}, {}], [{}, {}]] is not positive-definite", cx,
                                      cxy, cxy, cy));
  }
  return {cx, cy, cxy, std::log(det)};
}

Eigen::Matrix2d InfoMatrix::matrix() const {
  Eigen::Matrix2d m;
  m << cx, cxy, cxy, cy;
  return m;
}

double InfoMatrix::determinant() const { return std::exp(log_det); }

Eigen::Vector2d InfoMatrix::eigenvalues() const {
  const double half_diff = 0.5 * (cx - cy);
  const double big = 0.5 * (cx + cy) + std::hypot(half_diff, cxy);
  return {determinant() / big, big};
}

double InfoMatrix::quadratic_form(const Eigen::Vector2d& r) const {
  return cx * r.x() * r.x() + 2.0 * cxy * r.x() * r.y() + cy * r.y() * r.y();
}

namespace info {

namespace {

void require_finite(const InfoParams& p) {
  if (!(std::isfinite(p.alpha_hat) && std::isfinite(p.beta_hat) && std::isfinite(p.gamma_hat))) {
    throw InvalidArgument(fmt::format("non-finite information parameters ({}, {}, {})", p.alpha_hat,
                                      p.beta_hat, p.gamma_hat));
  }
}

}  // namespace

double log_sech2(double beta_hat) {
  const double a = std::abs(beta_hat);
  // log cosh(a) = a + log1p(exp(-2a)) - log 2
  return -2.0 * (a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2);
}

InfoMatrix build(const InfoParams& p) {
  require_finite(p);
  InfoMatrix m;
  m.cx = std::exp(p.alpha_hat);
  m.cy = std::exp(p.gamma_hat);
  m.cxy = std::exp(0.5 * (p.alpha_hat + p.gamma_hat)) * std::tanh(p.beta_hat);
  m.log_det = log_det(p);
  return m;
}

double log_det(const InfoParams& p) { return p.alpha_hat + p.gamma_hat + log_sech2(p.beta_hat); }

double log_det(const InfoMatrix& m) { return m.log_det; }

double flow_nll(const Eigen::Vector2d& residual, const InfoMatrix& m) {
  return 0.5 * (m.quadratic_form(residual) - m.log_det);
}

double flow_nll(const Eigen::Vector2d& residual, const InfoParams& p) { return flow_nll(residual, build(p)); }

Eigen::Matrix<double, 5, 1> nll_gradients(const Eigen::Vector2d& r, const InfoParams& p) {
  const InfoMatrix m = build(p);
  const double rx = r.x();
  const double ry = r.y();
  const double tb = std::tanh(p.beta_hat);
  const double scale = std::exp(0.5 * (p.alpha_hat + p.gamma_hat));

  Eigen::Matrix<double, 5, 1> g;
  g[0] = m.cx * rx + m.cxy * ry;
  g[1] = m.cxy * rx + m.cy * ry;
  // d cxy / d alpha_hat = cxy / 2, d log det / d alpha_hat = 1
  g[2] = 0.5 * (m.cx * rx * rx + m.cxy * rx * ry - 1.0);
  // d cxy / d beta_hat = scale * sech^2, d log sech^2 / d beta_hat = -2 tanh
  g[3] = rx * ry * scale * (1.0 - tb * tb) + tb;
  g[4] = 0.5 * (m.cy * ry * ry + m.cxy * rx * ry - 1.0);
  return g;
}

InfoParams params_at(const FlowField& f, int x, int y) {
  return {f.info.at(x, y, 0), f.info.at(x, y, 1), f.info.at(x, y, 2)};
}

double flow_nll_map(const FlowField& predicted, const Raster& reference) {
  if (!predicted.flow.same_extent(reference) || reference.channels() < 2) {
    throw InvalidArgument(fmt::format("flow NLL: predicted {}x{} vs reference {}x{}x{}", predicted.width(),
                                      predicted.height(), reference.width(), reference.height(),
                                      reference.channels()));
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < predicted.height(); ++y) {
    for (int x = 0; x < predicted.width(); ++x) {
      if (!predicted.valid(x, y)) continue;
      const double gx = reference.at(x, y, 0);
      const double gy = reference.at(x, y, 1);
      if (!std::isfinite(gx) || !std::isfinite(gy)) continue;
      const Eigen::Vector2d r(predicted.flow.at(x, y, 0) - gx, predicted.flow.at(x, y, 1) - gy);
      sum += flow_nll(r, params_at(predicted, x, y));
      ++n;
    }
  }
  if (n == 0) throw InvalidArgument("flow NLL: no jointly valid pixels");
  return sum / static_cast<double>(n);
}

}  // namespace info
}  // namespace flowpose
