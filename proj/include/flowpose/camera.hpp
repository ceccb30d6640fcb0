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

// Pinhole camera model, bilinear sampling and depth-driven warping.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "flowpose/lie_se3.hpp"
#include "flowpose/raster.hpp"

namespace flowpose {

struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws InvalidArgument unless fx, fy > 0 and the principal point lies
  /// strictly inside the raster.
  void validate() const;

  Eigen::Matrix3d matrix() const;

  /// Whitespace-separated `fx fy cx cy width height`.
  static Intrinsics read(const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;
};

namespace camera {

/// pi(x) = (x0 / x2, x1 / x2). Throws CheiralityError for x2 <= 1e-12.
Eigen::Vector2d project(const Eigen::Vector3d& x);

/// D * K^-1 (u, 1). Throws InvalidArgument for non-positive or non-finite D.
Eigen::Vector3d backproject(double depth, const Eigen::Vector2d& pixel, const Intrinsics& K);

Eigen::Vector2d pixel_to_normalised(const Eigen::Vector2d& pixel, const Intrinsics& K);
Eigen::Vector2d normalised_to_pixel(const Eigen::Vector2d& uv, const Intrinsics& K);

/// Whether p lies in [0, width - 1] x [0, height - 1].
bool in_bounds(const Raster& img, const Eigen::Vector2d& p);

/// Bilinear interpolation of one channel; nullopt outside the raster.
std::optional<double> sample(const Raster& img, const Eigen::Vector2d& p, int channel);

/// Bilinear interpolation of all channels; nullopt outside the raster.
std::optional<Eigen::VectorXd> bilinear_sample(const Raster& img, const Eigen::Vector2d& p);

struct WarpResult {
  ImageRaster image;
  std::vector<std::uint8_t> mask;

  bool valid(int x, int y) const { return mask[static_cast<std::size_t>(y) * image.width() + x] != 0; }
  std::size_t valid_count() const;
};

/// For every pixel u of the reference frame: sample src at
/// K pi(T pi^-1(D(u), u)). Pixels with invalid depth, failed cheirality or an
/// out-of-bounds target are masked out and left at zero.
WarpResult warp_image(const ImageRaster& src, const DepthMap& depth, const TransformSE3& T,
                      const Intrinsics& K);

/// Per-pixel flow (T x)_[u,v] - x_[u,v] of the inverse-depth point
/// x = (u, v, 1, 1/D), in normalised camera coordinates. Invalid pixels
/// (bad depth, cheirality) are masked; info channels are zero.
FlowField flow_from_pose_normalised(const DepthMap& depth, const TransformSE3& T, const Intrinsics& K);

/// Same as flow_from_pose_normalised, scaled to pixel units by (fx, fy).
FlowField flow_from_pose(const DepthMap& depth, const TransformSE3& T, const Intrinsics& K);

/// Pure x-translation used for rectified stereo pairs.
TransformSE3 stereo_transform(double x_offset);

}  // namespace camera
}  // namespace flowpose
