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

#include <Eigen/LU>

#include "flowpose/errors.hpp"
#include "flowpose/info_matrix.hpp"
#include "flowpose/synth.hpp"

using namespace flowpose;

namespace {

// Entry-wise reference: log(cx cy - cxy^2) straight from the definitions.
double naive_log_det(const InfoParams& p) {
  const double cx = std::exp(p.alpha_hat);
  const double cy = std::exp(p.gamma_hat);
  const double cxy = std::exp(0.5 * (p.alpha_hat + p.gamma_hat)) * std::tanh(p.beta_hat);
  return std::log(cx * cy - cxy * cxy);
}

double nll_reference(const Eigen::Vector2d& r, const InfoParams& p) {
  const double cx = std::exp(p.alpha_hat);
  const double cy = std::exp(p.gamma_hat);
  const double cxy = std::exp(0.5 * (p.alpha_hat + p.gamma_hat)) * std::tanh(p.beta_hat);
  Eigen::Matrix2d M;
  M << cx, cxy, cxy, cy;
  return 0.5 * (r.dot(M * r) - std::log(M.determinant()));
}

}  // namespace

TEST_SUITE("info_matrix") {
  TEST_CASE("worked examples") {
    const InfoMatrix I = info::build({0.0, 0.0, 0.0});
    CHECK(I.matrix() == Eigen::Matrix2d::Identity());
    CHECK(I.log_det == 0.0);

    const InfoMatrix M = info::build({1.0, 1.0, 1.0});
    CHECK(M.cx == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
    CHECK(M.cxy == doctest::Approx(std::exp(1.0) * std::tanh(1.0)).epsilon(1e-15));
    CHECK(M.determinant() == doctest::Approx(3.1032139703).epsilon(1e-10));
    CHECK(M.log_det == doctest::Approx(1.1324383390).epsilon(1e-10));
    CHECK(info::flow_nll({1.0, 1.0}, M) == doctest::Approx(4.22229021373723).epsilon(1e-13));
    CHECK(info::flow_nll(Eigen::Vector2d::Zero(), info::build({0, 0, 0})) == 0.0);
  }

  TEST_CASE("positive-definite for every finite parameter triple") {
    SplitMix64 rng(20);
    for (int i = 0; i < 100000; ++i) {
      const InfoParams p{rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20)};
      const InfoMatrix m = info::build(p);
      REQUIRE(m.cx > 0.0);
      REQUIRE(m.cy > 0.0);
      REQUIRE(m.determinant() > 0.0);
      REQUIRE(m.eigenvalues()[0] > 0.0);
      REQUIRE(std::abs(m.cxy) <= std::sqrt(m.cx * m.cy) * (1.0 + 1e-14));
    }
  }

  TEST_CASE("stable log-determinant") {
    SplitMix64 rng(21);
    for (int i = 0; i < 10000; ++i) {
      const InfoParams p{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
      REQUIRE(std::abs(info::log_det(p) - naive_log_det(p)) < 1e-9);
    }
    for (double b = -80.0; b <= 80.0; b += 0.25) {
      const double v = info::log_sech2(b);
      REQUIRE(std::isfinite(v));
      REQUIRE(v <= 0.0);
      REQUIRE(v == info::log_sech2(-b));
      if (std::abs(b) <= 18.0) {
        const double c = std::cosh(b);
        REQUIRE(std::abs(v - std::log(1.0 / (c * c))) < 1e-12 * std::max(1.0, std::abs(v)));
      }
    }
    CHECK(info::log_sech2(80.0) == doctest::Approx(-2.0 * (80.0 - std::log(2.0))).epsilon(1e-15));
    // The naive form has lost all information this far out.
    CHECK(std::isinf(std::log1p(-std::tanh(80.0) * std::tanh(80.0))));
  }

  TEST_CASE("NLL matches the dense reference") {
    SplitMix64 rng(22);
    for (int i = 0; i < 1000; ++i) {
      const InfoParams p{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
      const Eigen::Vector2d r(rng.uniform(-2, 2), rng.uniform(-2, 2));
      REQUIRE(info::flow_nll(r, p) == doctest::Approx(nll_reference(r, p)).epsilon(1e-9));
    }
  }

  TEST_CASE("analytic gradients match central differences") {
    SplitMix64 rng(23);
    const double h = 1e-6;
    for (int i = 0; i < 1000; ++i) {
      const Eigen::Vector2d r(rng.uniform(-3, 3), rng.uniform(-3, 3));
      const InfoParams p{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
      const auto g = info::nll_gradients(r, p);
      Eigen::Matrix<double, 5, 1> fd;
      for (int k = 0; k < 5; ++k) {
        Eigen::Matrix<double, 5, 1> x;
        x << r, p.alpha_hat, p.beta_hat, p.gamma_hat;
        auto f = [](const Eigen::Matrix<double, 5, 1>& z) {
          return nll_reference(z.head<2>(), {z[2], z[3], z[4]});
        };
        Eigen::Matrix<double, 5, 1> xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        fd[k] = (f(xp) - f(xm)) / (2.0 * h);
      }
      REQUIRE((g - fd).norm() <= 1e-6 * std::max(1.0, g.norm()));
    }
  }

  TEST_CASE("from_entries rejects indefinite matrices") {
    CHECK_NOTHROW(InfoMatrix::from_entries(2.0, 1.0, 0.5));
    CHECK_THROWS_AS(InfoMatrix::from_entries(1.0, 1.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(InfoMatrix::from_entries(-1.0, 1.0, 0.0), InvalidArgument);
    CHECK_THROWS_AS(info::build({std::numeric_limits<double>::quiet_NaN(), 0, 0}), InvalidArgument);
  }

  TEST_CASE("eigenvalues") {
    const InfoMatrix m = InfoMatrix::from_entries(3.0, 2.0, 1.0);
    const Eigen::Vector2d ev = m.eigenvalues();
    CHECK(ev[0] == doctest::Approx(2.5 - std::sqrt(1.25)));
    CHECK(ev[1] == doctest::Approx(2.5 + std::sqrt(1.25)));
  }

  TEST_CASE("dense NLL map averages valid pixels") {
    FlowField f(2, 1);
    f.set_valid(0, 0, true);
    f.set_valid(1, 0, false);
    f.flow.at(0, 0, 0) = 1.0;
    f.flow.at(0, 0, 1) = 1.0;
    f.info.at(0, 0, 0) = f.info.at(0, 0, 1) = f.info.at(0, 0, 2) = 1.0;
    Raster ref(2, 1, 2, 0.0);
    CHECK(info::flow_nll_map(f, ref) == doctest::Approx(4.22229021373723).epsilon(1e-13));
    f.set_valid(0, 0, false);
    CHECK_THROWS_AS(info::flow_nll_map(f, ref), InvalidArgument);
  }
}
