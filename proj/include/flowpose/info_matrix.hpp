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

// 2x2 flow information matrix built from three unconstrained parameters:
//
//   c_x  = exp(alpha_hat)
//   c_y  = exp(gamma_hat)
//   c_xy = exp((alpha_hat + gamma_hat) / 2) * tanh(beta_hat)
//
// which is symmetric positive-definite for every finite input, with
// det = exp(alpha_hat + gamma_hat) * sech^2(beta_hat).

#pragma once

#include <Eigen/Core>

#include "flowpose/raster.hpp"

namespace flowpose {

/// Raw network outputs; any finite values are admissible.
struct InfoParams {
  double alpha_hat = 0.0;
  double beta_hat = 0.0;
  double gamma_hat = 0.0;
};

/// Symmetric matrix [[cx, cxy], [cxy, cy]].
///
/// log_det is carried alongside the entries. When the matrix comes from
/// build() it is evaluated from the parameters, which stays finite and
/// accurate after cxy^2 has rounded onto cx * cy.
struct InfoMatrix {
  double cx = 1.0;
  double cy = 1.0;
  double cxy = 0.0;
  double log_det = 0.0;

  static InfoMatrix identity() { return {}; }
  /// Validates positive-definiteness from the assembled entries.
  static InfoMatrix from_entries(double cx, double cy, double cxy);

  Eigen::Matrix2d matrix() const;
  double determinant() const;
  /// Eigenvalues (smallest first); the small one is det / largest so it
  /// does not cancel.
  Eigen::Vector2d eigenvalues() const;
  double quadratic_form(const Eigen::Vector2d& r) const;
};

namespace info {

/// Throws InvalidArgument for non-finite parameters.
InfoMatrix build(const InfoParams& p);

/// log(1 - tanh^2(b)) = -2 log cosh(b), evaluated without overflow or
/// cancellation.
double log_sech2(double beta_hat);

/// alpha_hat + gamma_hat + log(1 - tanh^2(beta_hat)).
double log_det(const InfoParams& p);
double log_det(const InfoMatrix& m);

/// 0.5 * (r^T M r - log det M).
double flow_nll(const Eigen::Vector2d& residual, const InfoMatrix& m);
double flow_nll(const Eigen::Vector2d& residual, const InfoParams& p);

/// Gradient of flow_nll(r, build(p)) with respect to
/// (r_x, r_y, alpha_hat, beta_hat, gamma_hat).
Eigen::Matrix<double, 5, 1> nll_gradients(const Eigen::Vector2d& residual, const InfoParams& p);

InfoParams params_at(const FlowField& f, int x, int y);

/// Mean per-pixel flow_nll of predicted flow against a reference flow, over
/// pixels valid in both. Reference flow uses channels 0..1 of `reference`.
/// Throws InvalidArgument on shape mismatch or when no pixel is valid.
double flow_nll_map(const FlowField& predicted, const Raster& reference);

}  // namespace info
}  // namespace flowpose
