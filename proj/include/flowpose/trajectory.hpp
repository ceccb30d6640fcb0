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

// Trajectory chaining, TUM text I/O, association and ATE/RPE scoring with a
// single global similarity alignment.

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "flowpose/lie_se3.hpp"

namespace flowpose {

/// World-from-camera pose at a timestamp (seconds).
struct PoseSample {
  double timestamp = 0.0;
  TransformSE3 pose;
};

/// Poses with strictly increasing timestamps.
class Trajectory {
 public:
  Trajectory() = default;
  /// Throws InvalidArgument if timestamps are not strictly increasing.
  explicit Trajectory(std::vector<PoseSample> samples);

  const std::vector<PoseSample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const PoseSample& operator[](std::size_t i) const { return samples_[i]; }
  Eigen::Vector3d position(std::size_t i) const { return samples_[i].pose.translation(); }

 private:
  std::vector<PoseSample> samples_;
};

struct RelativeMotion {
  double timestamp;
  MotionVector xi;  // maps points of the previous frame into this frame
};

using IndexPair = std::pair<std::size_t, std::size_t>;  // (est index, gt index)

/// Similarity gt ~ scale * R * est + t.
struct Alignment {
  Trajectory aligned;
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  /// |dt_gt| / |dt_est| for each adjacent matched pair with |dt_est| >= 1e-9.
  std::vector<double> per_pose_scales;
  bool low_rank = false;
};

struct ScaleQuantiles {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

struct EvalReport {
  double ate_rmse = 0.0;   // metres
  double rpe_trans = 0.0;  // metres
  double rpe_rot = 0.0;    // degrees
  std::vector<double> per_pose_scales;
  std::size_t matched_count = 0;
  double scale = 1.0;
  bool low_rank = false;
};

namespace traj {

/// T_k = T_{k-1} * exp(xi_k)^-1 starting from the identity at the first
/// timestamp. The first entry's motion is ignored.
Trajectory chain(const std::vector<RelativeMotion>& relatives);

/// Greedy nearest-timestamp matching within max_dt, each sample used once,
/// sorted by time. Throws InsufficientData for fewer than 2 matches.
std::vector<IndexPair> associate(const Trajectory& est, const Trajectory& gt, double max_dt = 0.02);

/// Closed-form similarity alignment of matched est positions onto gt.
/// Throws InsufficientData for fewer than 2 pairs.
Alignment align_and_scale(const Trajectory& est, const Trajectory& gt, const std::vector<IndexPair>& pairs);

/// RMSE of matched position differences.
double ate(const Trajectory& aligned, const Trajectory& gt, const std::vector<IndexPair>& pairs);

/// Translational (m) and rotational (deg) RMSE of
/// E = (gt_i^-1 gt_{i+d})^-1 (est_i^-1 est_{i+d}) over matched index i.
std::pair<double, double> rpe(const Trajectory& est, const Trajectory& gt, const std::vector<IndexPair>& pairs,
                              std::size_t delta = 1);

/// associate, align_and_scale, then ATE and RPE on the aligned estimate.
EvalReport evaluate(const Trajectory& est, const Trajectory& gt, std::size_t rpe_delta = 1, double max_dt = 0.02);

/// Linear-interpolation quantiles. Throws InvalidArgument on empty input.
ScaleQuantiles quantiles(std::vector<double> values);

Trajectory read_tum(std::istream& in);
Trajectory read_tum(const std::filesystem::path& path);
void write_tum(std::ostream& out, const Trajectory& t);
void write_tum(const std::filesystem::path& path, const Trajectory& t);

}  // namespace traj
}  // namespace flowpose
