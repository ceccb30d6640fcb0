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

// Depth, stereo, smoothness and pose losses.
//
// Every map-level loss is a mean over the pixels valid in all participating
// rasters; the count is the valid count, not the raster size.

#pragma once

#include <cmath>

#include "flowpose/camera.hpp"
#include "flowpose/lie_se3.hpp"
#include "flowpose/raster.hpp"

namespace flowpose {

struct LossWeights {
  double lambda1 = 2.0;             // berHu
  double lambda2 = 1.0;             // stereo photometric
  double lambda3 = std::exp(-4.0);  // smoothness

  void validate() const;
};

namespace loss {

/// Reverse Huber on d = pred - gt with threshold c = max|d| / 5:
/// |d| for |d| <= c, (d^2 + c^2) / (2c) above.
double berhu_pixel(double d, double c);

/// Mean berHu over pixels valid in both maps. Throws InvalidArgument on
/// shape mismatch or an empty joint mask.
double berhu(const DepthMap& pred, const DepthMap& gt);

/// Sum of the two directional mean absolute photometric errors of a
/// rectified stereo pair: I_L against I_R warped through D_L and the
/// left-to-right shift, plus I_R against I_L warped through D_R and the
/// right-to-left shift. The right camera sits `baseline` metres along +x.
double photometric_lr(const ImageRaster& left, const ImageRaster& right, const DepthMap& depth_left,
                      const DepthMap& depth_right, double baseline, const Intrinsics& K);

/// Mean |forward x difference| plus mean |forward y difference|, each over
/// the pairs of valid neighbours on its own axis.
double smoothness(const DepthMap& depth);

struct StereoPair {
  const DepthMap& pred_left;
  const DepthMap& pred_right;
  const DepthMap& gt_left;
  const DepthMap& gt_right;
  const ImageRaster& image_left;
  const ImageRaster& image_right;
  double baseline;
  const Intrinsics& K;
};

/// lambda1 (berhu_L + berhu_R) + lambda2 photometric_lr + lambda3 (smooth_L + smooth_R).
double combined_semisupervised(const StereoPair& s, const LossWeights& w = {});

/// Mean absolute difference between I_1 and I_2 warped into frame 1 through
/// D_1 and exp(xi), over the valid warp mask.
double pose_photometric(const ImageRaster& image1, const ImageRaster& image2, const DepthMap& depth1,
                        const MotionVector& xi, const Intrinsics& K);

/// |xi - log(T_gt)|_2.
double pose_loss(const MotionVector& xi, const TransformSE3& gt);

}  // namespace loss
}  // namespace flowpose
