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

// Dense rasters and the ENGR on-disk format.
//
// ENGR layout (all integers little-endian u32):
//   "ENGR" | version = 1 | width | height | channels | float32 data
// Data is row-major with channels interleaved. Non-finite values mark
// invalid pixels.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace flowpose {

/// width x height x channels raster of doubles, row-major, channel-interleaved.
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, int channels, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const { return data_.empty(); }

  double& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  double at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const Raster& o) const {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }
  bool same_extent(const Raster& o) const { return width_ == o.width_ && height_ == o.height_; }

  /// Copy with every value rounded to float32 (the on-disk precision).
  Raster quantised() const;

  /// Channels [first, first + count) as a new raster.
  Raster slice_channels(int first, int count) const;

  bool operator==(const Raster& o) const = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

using ImageRaster = Raster;

/// Metric depth raster; a pixel is valid when its depth is finite and > 0.
class DepthMap {
 public:
  DepthMap() = default;
  explicit DepthMap(Raster depth);
  DepthMap(int width, int height, double fill);

  int width() const { return raster_.width(); }
  int height() const { return raster_.height(); }
  double at(int x, int y) const { return raster_.at(x, y); }
  bool valid(int x, int y) const;
  void set(int x, int y, double d) { raster_.at(x, y) = d; }
  void invalidate(int x, int y);

  const Raster& raster() const { return raster_; }

 private:
  Raster raster_;
};

/// Dense flow in pixel units plus the raw information-matrix parameters
/// (alpha_hat, beta_hat, gamma_hat) and a validity mask.
struct FlowField {
  Raster flow;               // 2 channels, pixels
  Raster info;               // 3 channels, raw parameters
  std::vector<std::uint8_t> mask;

  FlowField() = default;
  FlowField(int width, int height);

  int width() const { return flow.width(); }
  int height() const { return flow.height(); }
  bool valid(int x, int y) const { return mask[static_cast<std::size_t>(y) * width() + x] != 0; }
  void set_valid(int x, int y, bool v) { mask[static_cast<std::size_t>(y) * width() + x] = v ? 1 : 0; }
  std::size_t valid_count() const;

  /// 5-channel (flow_x, flow_y, alpha_hat, beta_hat, gamma_hat) packing used
  /// on disk. Invalid pixels are written as NaN.
  Raster to_raster() const;
  /// Inverse of to_raster(). A pixel is valid iff all five channels are finite.
  static FlowField from_raster(const Raster& r);
};

namespace engr {

inline constexpr char kMagic[4] = {'E', 'N', 'G', 'R'};
inline constexpr std::uint32_t kVersion = 1;

std::vector<std::uint8_t> encode(const Raster& r);
Raster decode(std::span<const std::uint8_t> bytes);

void write(const std::filesystem::path& path, const Raster& r);
Raster read(const std::filesystem::path& path);

}  // namespace engr

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace flowpose
