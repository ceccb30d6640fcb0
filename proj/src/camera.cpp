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

#include "flowpose/camera.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "flowpose/errors.hpp"

namespace flowpose {

namespace {
constexpr double kCheiralityEps = 1e-12;
}

void Intrinsics::validate() const {
  const bool ok = std::isfinite(fx) && std::isfinite(fy) && std::isfinite(cx) && std::isfinite(cy) &&
                  fx > 0.0 && fy > 0.0 && width > 0 && height > 0 && cx > 0.0 && cx < width &&
                  cy > 0.0 && cy < height;
  if (!ok) {
    throw InvalidArgument(
        fmt::format("invalid intrinsics fx={} fy={} cx={} cy={} size={}x{}", fx, fy, cx, cy, width, height));
  }
}

Eigen::Matrix3d Intrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Intrinsics Intrinsics::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open intrinsics file '{}'", path.string()));
  Intrinsics k;
  if (!(in >> k.fx >> k.fy >> k.cx >> k.cy >> k.width >> k.height)) {
    throw FormatError(fmt::format("'{}': expected `fx fy cx cy width height`", path.string()));
  }
  std::string trailing;
  if (in >> trailing) throw FormatError(fmt::format("'{}': unexpected trailing content", path.string()));
  k.validate();
  return k;
}

void Intrinsics::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out << fmt::format("{:.17g} {:.17g} {:.17g} {:.17g} {} {}\n", fx, fy, cx, cy, width, height);
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

namespace camera {

Eigen::Vector2d project(const Eigen::Vector3d& x) {
  if (!(x.z() > kCheiralityEps)) {
    throw CheiralityError(fmt::format("cannot project point with z = {:.3e}", x.z()));
  }
  return {x.x() / x.z(), x.y() / x.z()};
}

Eigen::Vector3d backproject(double depth, const Eigen::Vector2d& pixel, const Intrinsics& K) {
  if (!std::isfinite(depth) || depth <= 0.0) {
    throw InvalidArgument(fmt::format("backproject needs positive finite depth, got {}", depth));
  }
  const Eigen::Vector2d uv = pixel_to_normalised(pixel, K);
  return depth * Eigen::Vector3d(uv.x(), uv.y(), 1.0);
}

Eigen::Vector2d pixel_to_normalised(const Eigen::Vector2d& pixel, const Intrinsics& K) {
  return {(pixel.x() - K.cx) / K.fx, (pixel.y() - K.cy) / K.fy};
}

Eigen::Vector2d normalised_to_pixel(const Eigen::Vector2d& uv, const Intrinsics& K) {
  return {uv.x() * K.fx + K.cx, uv.y() * K.fy + K.cy};
}

bool in_bounds(const Raster& img, const Eigen::Vector2d& p) {
  return p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= img.width() - 1 && p.y() <= img.height() - 1;
}

namespace {

struct Bilinear {
  int x0, y0, x1, y1;
  double ax, ay;
};

// Neighbourhood for a point already known to be in bounds. On the last
// row/column the upper neighbour collapses onto the lower one.
Bilinear neighbourhood(const Raster& img, const Eigen::Vector2d& p) {
  Bilinear b;
  b.x0 = static_cast<int>(std::floor(p.x()));
  b.y0 = static_cast<int>(std::floor(p.y()));
  b.ax = p.x() - b.x0;
  b.ay = p.y() - b.y0;
  b.x1 = b.x0 + 1 < img.width() ? b.x0 + 1 : b.x0;
  b.y1 = b.y0 + 1 < img.height() ? b.y0 + 1 : b.y0;
  return b;
}

double interpolate(const Raster& img, const Bilinear& b, int c) {
  const double top = (1.0 - b.ax) * img.at(b.x0, b.y0, c) + b.ax * img.at(b.x1, b.y0, c);
  const double bottom = (1.0 - b.ax) * img.at(b.x0, b.y1, c) + b.ax * img.at(b.x1, b.y1, c);
  return (1.0 - b.ay) * top + b.ay * bottom;
}

}  // namespace

std::optional<double> sample(const Raster& img, const Eigen::Vector2d& p, int channel) {
  if (!in_bounds(img, p)) return std::nullopt;
  return interpolate(img, neighbourhood(img, p), channel);
}

std::optional<Eigen::VectorXd> bilinear_sample(const Raster& img, const Eigen::Vector2d& p) {
  if (!in_bounds(img, p)) return std::nullopt;
  const auto b = neighbourhood(img, p);
  Eigen::VectorXd out(img.channels());
  for (int c = 0; c < img.channels(); ++c) out[c] = interpolate(img, b, c);
  return out;
}

std::size_t WarpResult::valid_count() const {
  std::size_t n = 0;
  for (auto m : mask) n += m != 0;
  return n;
}

WarpResult warp_image(const ImageRaster& src, const DepthMap& depth, const TransformSE3& T,
                      const Intrinsics& K) {
  if (!src.same_extent(depth.raster()) || src.width() != K.width || src.height() != K.height) {
    throw InvalidArgument(fmt::format("warp_image: image {}x{}, depth {}x{}, intrinsics {}x{}", src.width(),
                                      src.height(), depth.width(), depth.height(), K.width, K.height));
  }
  WarpResult out{ImageRaster(src.width(), src.height(), src.channels()),
                 std::vector<std::uint8_t>(src.pixel_count(), 0)};
  const Eigen::Matrix3d R = T.rotation();
  const Eigen::Vector3d t = T.translation();
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      if (!depth.valid(x, y)) continue;
      const Eigen::Vector3d X = R * backproject(depth.at(x, y), {x, y}, K) + t;
      if (!(X.z() > kCheiralityEps)) continue;
      const Eigen::Vector2d target = normalised_to_pixel(project(X), K);
      if (!in_bounds(src, target)) continue;
      const auto b = neighbourhood(src, target);
      for (int c = 0; c < src.channels(); ++c) out.image.at(x, y, c) = interpolate(src, b, c);
      out.mask[static_cast<std::size_t>(y) * src.width() + x] = 1;
    }
  }
  return out;
}

FlowField flow_from_pose_normalised(const DepthMap& depth, const TransformSE3& T, const Intrinsics& K) {
  if (depth.width() != K.width || depth.height() != K.height) {
    throw InvalidArgument("flow_from_pose: depth and intrinsics disagree on raster size");
  }
  FlowField f(depth.width(), depth.height());
  const Eigen::Matrix4d& M = T.matrix();
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      f.set_valid(x, y, false);
      if (!depth.valid(x, y)) continue;
      const Eigen::Vector2d uv = pixel_to_normalised({x, y}, K);
      const Eigen::Vector4d p(uv.x(), uv.y(), 1.0, 1.0 / depth.at(x, y));
      const Eigen::Vector4d tp = M * p;
      if (!(tp[2] > kCheiralityEps)) continue;
      f.flow.at(x, y, 0) = tp[0] / tp[2] - uv.x();
      f.flow.at(x, y, 1) = tp[1] / tp[2] - uv.y();
      f.set_valid(x, y, true);
    }
  }
  return f;
}

FlowField flow_from_pose(const DepthMap& depth, const TransformSE3& T, const Intrinsics& K) {
  FlowField f = flow_from_pose_normalised(depth, T, K);
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      f.flow.at(x, y, 0) *= K.fx;
      f.flow.at(x, y, 1) *= K.fy;
    }
  }
  return f;
}

TransformSE3 stereo_transform(double x_offset) {
  return TransformSE3(Eigen::Matrix3d::Identity(), Eigen::Vector3d(x_offset, 0.0, 0.0));
}

}  // namespace camera
}  // namespace flowpose
