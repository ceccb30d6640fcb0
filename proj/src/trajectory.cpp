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

#include "flowpose/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <fmt/format.h>

#include "flowpose/errors.hpp"

namespace flowpose {

Trajectory::Trajectory(std::vector<PoseSample> samples) : samples_(std::move(samples)) {
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    if (!(samples_[i].timestamp > samples_[i - 1].timestamp)) {
      throw InvalidArgument(fmt::format("timestamps must increase strictly (index {}: {:.6f} after {:.6f})", i,
                                        samples_[i].timestamp, samples_[i - 1].timestamp));
    }
  }
}

namespace traj {

Trajectory chain(const std::vector<RelativeMotion>& relatives) {
  std::vector<PoseSample> out;
  out.reserve(relatives.size());
  TransformSE3 world = TransformSE3::identity();
  for (std::size_t k = 0; k < relatives.size(); ++k) {
    if (k > 0) world = se3::compose(world, se3::inverse(se3::exp(relatives[k].xi)));
    out.push_back({relatives[k].timestamp, world});
  }
  return Trajectory(std::move(out));
}

std::vector<IndexPair> associate(const Trajectory& est, const Trajectory& gt, double max_dt) {
  if (!(max_dt > 0.0)) throw InvalidArgument(fmt::format("max_dt must be > 0, got {}", max_dt));

  struct Candidate {
    double dt;
    std::size_t e, g;
  };
  std::vector<Candidate> candidates;
  // Both sequences are sorted, so a sliding lower bound keeps this linear in
  // the number of candidates.
  std::size_t g_lo = 0;
  for (std::size_t e = 0; e < est.size(); ++e) {
    const double te = est[e].timestamp;
    while (g_lo < gt.size() && gt[g_lo].timestamp < te - max_dt) ++g_lo;
    for (std::size_t g = g_lo; g < gt.size() && gt[g].timestamp <= te + max_dt; ++g) {
      const double dt = std::abs(gt[g].timestamp - te);
      if (dt < max_dt) candidates.push_back({dt, e, g});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.dt < b.dt; });

  std::vector<bool> used_e(est.size(), false);
  std::vector<bool> used_g(gt.size(), false);
  std::vector<IndexPair> pairs;
  for (const auto& c : candidates) {
    if (used_e[c.e] || used_g[c.g]) continue;
    used_e[c.e] = used_g[c.g] = true;
    pairs.emplace_back(c.e, c.g);
  }
  std::sort(pairs.begin(), pairs.end());
  if (pairs.size() < 2) {
    throw InsufficientData(fmt::format("only {} timestamp matches within {} s", pairs.size(), max_dt));
  }
  return pairs;
}

Alignment align_and_scale(const Trajectory& est, const Trajectory& gt, const std::vector<IndexPair>& pairs) {
  if (pairs.size() < 2) throw InsufficientData("alignment needs at least 2 matched poses");
  const auto n = static_cast<Eigen::Index>(pairs.size());
  Eigen::Matrix3Xd E(3, n);
  Eigen::Matrix3Xd G(3, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    E.col(k) = est.position(pairs[k].first);
    G.col(k) = gt.position(pairs[k].second);
  }
  const Eigen::Vector3d mu_e = E.rowwise().mean();
  const Eigen::Vector3d mu_g = G.rowwise().mean();
  const Eigen::Matrix3Xd Ec = E.colwise() - mu_e;
  const Eigen::Matrix3Xd Gc = G.colwise() - mu_g;

  Alignment a;
  const Eigen::JacobiSVD<Eigen::Matrix3Xd> shape(Ec);
  const Eigen::Vector3d sv = shape.singularValues();
  a.low_rank = sv[1] <= 1e-12 * std::max(1.0, sv[0]);

  const double var_e = Ec.squaredNorm() / static_cast<double>(n);
  if (var_e > 0.0) {
    const Eigen::Matrix3d cov = Gc * Ec.transpose() / static_cast<double>(n);
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d S = Eigen::Matrix3d::Identity();
    if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) S(2, 2) = -1.0;
    a.rotation = svd.matrixU() * S * svd.matrixV().transpose();
    a.scale = (svd.singularValues().asDiagonal() * S).trace() / var_e;
    if (!(a.scale > 0.0)) a.scale = 1.0;
  }
  a.translation = mu_g - a.scale * a.rotation * mu_e;

  std::vector<PoseSample> aligned;
  aligned.reserve(est.size());
  for (const auto& s : est.samples()) {
    const Eigen::Matrix3d R = a.rotation * s.pose.rotation();
    const Eigen::Vector3d t = a.scale * a.rotation * s.pose.translation() + a.translation;
    aligned.push_back({s.timestamp, TransformSE3(R, t)});
  }
  a.aligned = Trajectory(std::move(aligned));

  for (std::size_t k = 1; k < pairs.size(); ++k) {
    const double d_est = (est.position(pairs[k].first) - est.position(pairs[k - 1].first)).norm();
    if (d_est < 1e-9) continue;
    const double d_gt = (gt.position(pairs[k].second) - gt.position(pairs[k - 1].second)).norm();
    a.per_pose_scales.push_back(d_gt / d_est);
  }
  return a;
}

double ate(const Trajectory& aligned, const Trajectory& gt, const std::vector<IndexPair>& pairs) {
  if (pairs.empty()) throw InsufficientData("ATE needs at least one matched pose");
  double sum = 0.0;
  for (const auto& [e, g] : pairs) sum += (aligned.position(e) - gt.position(g)).squaredNorm();
  return std::sqrt(sum / static_cast<double>(pairs.size()));
}

std::pair<double, double> rpe(const Trajectory& est, const Trajectory& gt, const std::vector<IndexPair>& pairs,
                              std::size_t delta) {
  if (delta < 1) throw InvalidArgument("RPE delta must be >= 1");
  if (pairs.size() <= delta) {
    throw InsufficientData(fmt::format("RPE with delta {} needs more than {} matched poses", delta, pairs.size()));
  }
  double sum_t = 0.0;
  double sum_r = 0.0;
  const std::size_t count = pairs.size() - delta;
  for (std::size_t k = 0; k < count; ++k) {
    const auto [ei, gi] = pairs[k];
    const auto [ej, gj] = pairs[k + delta];
    const TransformSE3 rel_gt = se3::compose(se3::inverse(gt[gi].pose), gt[gj].pose);
    const TransformSE3 rel_est = se3::compose(se3::inverse(est[ei].pose), est[ej].pose);
    const TransformSE3 err = se3::compose(se3::inverse(rel_gt), rel_est);
    sum_t += err.translation().squaredNorm();
    const double angle_deg = se3::rotation_angle(err) * 180.0 / std::numbers::pi;
    sum_r += angle_deg * angle_deg;
  }
  return {std::sqrt(sum_t / static_cast<double>(count)), std::sqrt(sum_r / static_cast<double>(count))};
}

EvalReport evaluate(const Trajectory& est, const Trajectory& gt, std::size_t rpe_delta, double max_dt) {
  const auto pairs = associate(est, gt, max_dt);
  const Alignment a = align_and_scale(est, gt, pairs);
  EvalReport r;
  r.matched_count = pairs.size();
  r.ate_rmse = ate(a.aligned, gt, pairs);
  std::tie(r.rpe_trans, r.rpe_rot) = rpe(a.aligned, gt, pairs, rpe_delta);
  r.per_pose_scales = a.per_pose_scales;
  r.scale = a.scale;
  r.low_rank = a.low_rank;
  return r;
}

ScaleQuantiles quantiles(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("quantiles of an empty set");
  std::sort(values.begin(), values.end());
  const auto at = [&](double p) {
    const double h = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {values.front(), at(0.25), at(0.5), at(0.75), values.back()};
}

Trajectory read_tum(std::istream& in) {
  std::vector<PoseSample> samples;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    double v[8];
    for (double& x : v) {
      if (!(ss >> x)) throw FormatError(fmt::format("TUM line {}: expected 8 numbers", line_no));
    }
    std::string extra;
    if (ss >> extra) throw FormatError(fmt::format("TUM line {}: unexpected trailing field '{}'", line_no, extra));
    Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (!(q.norm() > 0.0) || !std::isfinite(q.norm())) {
      throw FormatError(fmt::format("TUM line {}: invalid quaternion", line_no));
    }
    q.normalize();
    samples.push_back({v[0], TransformSE3(q.toRotationMatrix(), Eigen::Vector3d(v[1], v[2], v[3]))});
  }
  try {
    return Trajectory(std::move(samples));
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
}

Trajectory read_tum(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open trajectory '{}'", path.string()));
  try {
    return read_tum(in);
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_tum(std::ostream& out, const Trajectory& t) {
  out << "# timestamp tx ty tz qx qy qz qw\n";
  for (const auto& s : t.samples()) {
    Eigen::Quaterniond q(s.pose.rotation());
    q.normalize();
    if (q.w() < 0.0) q.coeffs() = -q.coeffs();
    const Eigen::Vector3d p = s.pose.translation();
    out << fmt::format("{:.6f} {:.9f} {:.9f} {:.9f} {:.9f} {:.9f} {:.9f} {:.9f}\n", s.timestamp, p.x(), p.y(), p.z(),
                       q.x(), q.y(), q.z(), q.w());
  }
}

void write_tum(const std::filesystem::path& path, const Trajectory& t) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  write_tum(out, t);
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

}  // namespace traj
}  // namespace flowpose
