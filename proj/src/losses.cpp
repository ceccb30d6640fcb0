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

#include "flowpose/losses.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "flowpose/errors.hpp"

namespace flowpose {

void LossWeights::validate() const {
  if (!(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda3 >= 0.0)) {
    throw InvalidArgument(fmt::format("loss weights must be nonnegative ({}, {}, {})", lambda1, lambda2, lambda3));
  }
}

namespace loss {

namespace {

void require_same_extent(const Raster& a, const Raster& b, const char* what) {
  if (!a.same_extent(b)) {
    throw InvalidArgument(fmt::format("{}: raster sizes differ ({}x{} vs {}x{})", what, a.width(), a.height(),
                                      b.width(), b.height()));
  }
}

// Mean absolute difference of `reference` against a warped image over the
// warp mask. Returns the sum and count so callers can decide on emptiness.
std::pair<double, std::size_t> masked_l1(const ImageRaster& reference, const camera::WarpResult& warped) {
  double sum = 0.0;
  std::size_t n = 0;
  const int channels = reference.channels();
  for (int y = 0; y < reference.height(); ++y) {
    for (int x = 0; x < reference.width(); ++x) {
      if (!warped.valid(x, y)) continue;
      for (int c = 0; c < channels; ++c) sum += std::abs(reference.at(x, y, c) - warped.image.at(x, y, c));
      n += static_cast<std::size_t>(channels);
    }
  }
  return {sum, n};
}

}  // namespace

double berhu_pixel(double d, double c) {
  const double a = std::abs(d);
  if (a <= c) return a;
  return (d * d + c * c) / (2.0 * c);
}

double berhu(const DepthMap& pred, const DepthMap& gt) {
  require_same_extent(pred.raster(), gt.raster(), "berhu");
  double max_abs = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      if (!pred.valid(x, y) || !gt.valid(x, y)) continue;
      max_abs = std::max(max_abs, std::abs(pred.at(x, y) - gt.at(x, y)));
      ++n;
    }
  }
  if (n == 0) throw InvalidArgument("berhu: no jointly valid pixels");
  if (max_abs == 0.0) return 0.0;

  const double c = max_abs / 5.0;
  double sum = 0.0;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      if (!pred.valid(x, y) || !gt.valid(x, y)) continue;
      sum += berhu_pixel(pred.at(x, y) - gt.at(x, y), c);
    }
  }
  return sum / static_cast<double>(n);
}

double photometric_lr(const ImageRaster& left, const ImageRaster& right, const DepthMap& depth_left,
                      const DepthMap& depth_right, double baseline, const Intrinsics& K) {
  if (!(baseline >= 0.0) || !std::isfinite(baseline)) {
    throw InvalidArgument(fmt::format("photometric_lr: baseline must be >= 0, got {}", baseline));
  }
  require_same_extent(left, right, "photometric_lr");
  if (left.channels() != right.channels()) throw InvalidArgument("photometric_lr: channel counts differ");

  // Points in the left frame move by -baseline along x in the right frame.
  const auto left_from_right = camera::warp_image(right, depth_left, camera::stereo_transform(-baseline), K);
  const auto right_from_left = camera::warp_image(left, depth_right, camera::stereo_transform(baseline), K);
  const auto [sum_l, n_l] = masked_l1(left, left_from_right);
  const auto [sum_r, n_r] = masked_l1(right, right_from_left);
  if (n_l == 0 || n_r == 0) throw InvalidArgument("photometric_lr: a warp direction has no valid pixels");
  return sum_l / static_cast<double>(n_l) + sum_r / static_cast<double>(n_r);
}

double smoothness(const DepthMap& depth) {
  if (depth.width() < 2 || depth.height() < 2) {
    throw InvalidArgument(fmt::format("smoothness needs at least 2x2, got {}x{}", depth.width(), depth.height()));
  }
  double sx = 0.0;
  double sy = 0.0;
  std::size_t nx = 0;
  std::size_t ny = 0;
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.valid(x, y)) continue;
      if (x + 1 < depth.width() && depth.valid(x + 1, y)) {
        sx += std::abs(depth.at(x + 1, y) - depth.at(x, y));
        ++nx;
      }
      if (y + 1 < depth.height() && depth.valid(x, y + 1)) {
        sy += std::abs(depth.at(x, y + 1) - depth.at(x, y));
        ++ny;
      }
    }
  }
  const double mx = nx ? sx / static_cast<double>(nx) : 0.0;
  const double my = ny ? sy / static_cast<double>(ny) : 0.0;
  return mx + my;
}

double combined_semisupervised(const StereoPair& s, const LossWeights& w) {
  w.validate();
  const double lb = berhu(s.pred_left, s.gt_left) + berhu(s.pred_right, s.gt_right);
  const double lc = photometric_lr(s.image_left, s.image_right, s.pred_left, s.pred_right, s.baseline, s.K);
  const double ls = smoothness(s.pred_left) + smoothness(s.pred_right);
  return w.lambda1 * lb + w.lambda2 * lc + w.lambda3 * ls;
}

double pose_photometric(const ImageRaster& image1, const ImageRaster& image2, const DepthMap& depth1,
                        const MotionVector& xi, const Intrinsics& K) {
  require_same_extent(image1, image2, "pose_photometric");
  if (image1.channels() != image2.channels()) throw InvalidArgument("pose_photometric: channel counts differ");
  const auto warped = camera::warp_image(image2, depth1, se3::exp(xi), K);
  const auto [sum, n] = masked_l1(image1, warped);
  if (n == 0) throw InvalidArgument("pose_photometric: no valid pixels");
  return sum / static_cast<double>(n);
}

double pose_loss(const MotionVector& xi, const TransformSE3& gt) { return (xi - se3::log(gt)).norm(); }

}  // namespace loss
}  // namespace flowpose
