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

#include "flowpose/raster.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include <fmt/format.h>

#include "flowpose/errors.hpp"

namespace flowpose {

namespace {

constexpr std::size_t kHeaderBytes = 20;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[off + i]) << (8 * i);
  return v;
}

}  // namespace

Raster::Raster(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width <= 0 || height <= 0 || channels <= 0) {
    throw InvalidArgument(fmt::format("invalid raster shape {}x{}x{}", width, height, channels));
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Raster Raster::quantised() const {
  Raster r = *this;
  for (double& v : r.data_) v = static_cast<double>(static_cast<float>(v));
  return r;
}

Raster Raster::slice_channels(int first, int count) const {
  if (first < 0 || count <= 0 || first + count > channels_) {
    throw InvalidArgument(fmt::format("channel slice [{}, {}) out of range for {} channels", first,
                                      first + count, channels_));
  }
  Raster r(width_, height_, count);
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      for (int c = 0; c < count; ++c) r.at(x, y, c) = at(x, y, first + c);
  return r;
}

DepthMap::DepthMap(Raster depth) : raster_(std::move(depth)) {
  if (raster_.channels() != 1) {
    throw InvalidArgument(fmt::format("depth raster must have 1 channel, got {}", raster_.channels()));
  }
}

DepthMap::DepthMap(int width, int height, double fill) : raster_(width, height, 1, fill) {}

bool DepthMap::valid(int x, int y) const {
  const double d = raster_.at(x, y);
  return std::isfinite(d) && d > 0.0;
}

void DepthMap::invalidate(int x, int y) {
  raster_.at(x, y) = std::numeric_limits<double>::quiet_NaN();
}

FlowField::FlowField(int width, int height)
    : flow(width, height, 2), info(width, height, 3), mask(static_cast<std::size_t>(width) * height, 1) {}

std::size_t FlowField::valid_count() const {
  std::size_t n = 0;
  for (auto m : mask) n += m != 0;
  return n;
}

Raster FlowField::to_raster() const {
  Raster r(width(), height(), 5);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int y = 0; y < height(); ++y) {
    for (int x = 0; x < width(); ++x) {
      const bool ok = valid(x, y);
      r.at(x, y, 0) = ok ? flow.at(x, y, 0) : nan;
      r.at(x, y, 1) = ok ? flow.at(x, y, 1) : nan;
      for (int c = 0; c < 3; ++c) r.at(x, y, 2 + c) = ok ? info.at(x, y, c) : nan;
    }
  }
  return r;
}

FlowField FlowField::from_raster(const Raster& r) {
  if (r.channels() != 5) {
    throw InvalidArgument(fmt::format("flow raster must have 5 channels, got {}", r.channels()));
  }
  FlowField f(r.width(), r.height());
  for (int y = 0; y < r.height(); ++y) {
    for (int x = 0; x < r.width(); ++x) {
      bool ok = true;
      for (int c = 0; c < 5; ++c) ok = ok && std::isfinite(r.at(x, y, c));
      f.set_valid(x, y, ok);
      f.flow.at(x, y, 0) = ok ? r.at(x, y, 0) : 0.0;
      f.flow.at(x, y, 1) = ok ? r.at(x, y, 1) : 0.0;
      for (int c = 0; c < 3; ++c) f.info.at(x, y, c) = ok ? r.at(x, y, 2 + c) : 0.0;
    }
  }
  return f;
}

namespace engr {

std::vector<std::uint8_t> encode(const Raster& r) {
  if (r.empty()) throw InvalidArgument("cannot encode an empty raster");
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + r.data().size() * 4);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(r.width()));
  put_u32(out, static_cast<std::uint32_t>(r.height()));
  put_u32(out, static_cast<std::uint32_t>(r.channels()));
  for (double v : r.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

Raster decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not an ENGR raster (bad magic)");
  }
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kVersion) throw FormatError(fmt::format("unsupported ENGR version {}", version));
  const std::uint32_t w = get_u32(bytes, 8);
  const std::uint32_t h = get_u32(bytes, 12);
  const std::uint32_t c = get_u32(bytes, 16);
  if (w == 0 || h == 0 || c == 0 || w > (1u << 16) || h > (1u << 16) || c > 64) {
    throw FormatError(fmt::format("implausible ENGR shape {}x{}x{}", w, h, c));
  }
  const std::size_t n = static_cast<std::size_t>(w) * h * c;
  if (bytes.size() != kHeaderBytes + 4 * n) {
    throw FormatError(fmt::format("ENGR payload is {} bytes, expected {}", bytes.size() - kHeaderBytes, 4 * n));
  }
  Raster r(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c));
  auto data = r.data();
  for (std::size_t i = 0; i < n; ++i) {
    data[i] = static_cast<double>(std::bit_cast<float>(get_u32(bytes, kHeaderBytes + 4 * i)));
  }
  return r;
}

void write(const std::filesystem::path& path, const Raster& r) { write_file_bytes(path, encode(r)); }

Raster read(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode(bytes);
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace engr

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

}  // namespace flowpose
