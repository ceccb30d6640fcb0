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

#include "flowpose/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "flowpose/errors.hpp"

namespace flowpose {

std::uint64_t SplitMix64::below(std::uint64_t n) {
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t v;
  do {
    v = next();
  } while (v >= limit);
  return v % n;
}

double SplitMix64::gaussian() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Intrinsics SceneSpec::default_intrinsics(int width, int height) {
  return {static_cast<double>(width), static_cast<double>(width), 0.5 * (width - 1), 0.5 * (height - 1), width,
          height};
}

void SceneSpec::validate() const {
  if (width < 2 || height < 2) throw InvalidArgument(fmt::format("scene must be at least 2x2, got {}x{}", width, height));
  intrinsics.validate();
  if (intrinsics.width != width || intrinsics.height != height) {
    throw InvalidArgument("scene intrinsics disagree with the scene size");
  }
  if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0)) {
    throw InvalidArgument(fmt::format("outlier_fraction must be in [0, 1), got {}", outlier_fraction));
  }
  if (!(outlier_magnitude >= 0.0) || !std::isfinite(outlier_magnitude)) {
    throw InvalidArgument("outlier_magnitude must be finite and >= 0");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw InvalidArgument("noise_sigma must be finite and >= 0");
  if (const auto* c = std::get_if<CheckerTexture>(&texture_model); c && !(c->period > 0.0)) {
    throw InvalidArgument("checker period must be > 0");
  }
  if (const auto* p = std::get_if<PlaneDepth>(&depth_model); p && !(p->normal.norm() > 0.0)) {
    throw InvalidArgument("plane normal must be nonzero");
  }
}

namespace synth {

namespace {

constexpr double kLatticeSpacing = 16.0;
constexpr double kBaseDepth = 2.0;
constexpr std::uint64_t kNoiseStream = 0x6E6F697365000001ull;
constexpr std::uint64_t kOutlierStream = 0x6F75746C69657201ull;
constexpr std::uint64_t kTextureStream = 0x7465787475726501ull;

// Hash-based lattice value in [-1, 1] for integer node (i, j).
double lattice(std::uint64_t seed, std::int64_t i, std::int64_t j) {
  SplitMix64 h(seed ^ (static_cast<std::uint64_t>(i) * 0xD1B54A32D192ED03ull) ^
               (static_cast<std::uint64_t>(j) * 0xABC98388FB8FAC03ull));
  h.next();
  return h.uniform(-1.0, 1.0);
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double lattice_noise(std::uint64_t seed, double x, double y) {
  const double gx = x / kLatticeSpacing;
  const double gy = y / kLatticeSpacing;
  const double fx = std::floor(gx);
  const double fy = std::floor(gy);
  const auto i = static_cast<std::int64_t>(fx);
  const auto j = static_cast<std::int64_t>(fy);
  const double sx = smoothstep(gx - fx);
  const double sy = smoothstep(gy - fy);
  const double top = (1.0 - sx) * lattice(seed, i, j) + sx * lattice(seed, i + 1, j);
  const double bottom = (1.0 - sx) * lattice(seed, i, j + 1) + sx * lattice(seed, i + 1, j + 1);
  return (1.0 - sy) * top + sy * bottom;
}

struct RampCoefficients {
  double gx, gy, k;
};

RampCoefficients ramp(const SceneSpec& spec, std::uint64_t seed) {
  SplitMix64 rng(seed ^ kTextureStream);
  const double gx = rng.uniform(-0.25, 0.25) / spec.width;
  const double gy = rng.uniform(-0.25, 0.25) / spec.height;
  const double k = rng.uniform(-1e-6, 1e-6);
  return {gx, gy, k};
}

// Sub-pixel position in view 2 of the surface point seen at pixel p1 of
// view 1, using the continuous depth model.
bool forward_map(const SceneSpec& spec, const TransformSE3& T, const Eigen::Vector2d& p1, Eigen::Vector2d& p2) {
  const double d = depth_at(spec, p1.x(), p1.y());
  if (!(d > 0.0) || !std::isfinite(d)) return false;
  const Eigen::Vector3d X = T * camera::backproject(d, p1, spec.intrinsics);
  if (!(X.z() > 1e-12)) return false;
  p2 = camera::normalised_to_pixel(camera::project(X), spec.intrinsics);
  return true;
}

// Inverse warp: find the view-1 pixel whose surface point lands on p2.
Eigen::Vector2d inverse_map(const SceneSpec& spec, const TransformSE3& T, const Eigen::Vector2d& p2) {
  Eigen::Vector2d p1 = p2;
  for (int it = 0; it < 100; ++it) {
    Eigen::Vector2d f;
    if (!forward_map(spec, T, p1, f)) break;
    const Eigen::Vector2d step = p2 - f;
    p1 += step;
    if (step.norm() < 1e-13) break;
  }
  return p1;
}

}  // namespace

double depth_at(const SceneSpec& spec, double x, double y) {
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, ConstantDepth>) {
          return m.depth;
        } else if constexpr (std::is_same_v<M, PlaneDepth>) {
          const Eigen::Vector2d uv = camera::pixel_to_normalised({x, y}, spec.intrinsics);
          return m.offset / m.normal.dot(Eigen::Vector3d(uv.x(), uv.y(), 1.0));
        } else {
          return kBaseDepth + m.amplitude * lattice_noise(m.seed, x, y);
        }
      },
      spec.depth_model);
}

double texture_at(const SceneSpec& spec, double x, double y) {
  return std::visit(
      [&](const auto& t) -> double {
        using M = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<M, CheckerTexture>) {
          const auto cell = static_cast<std::int64_t>(std::floor(x / t.period)) +
                            static_cast<std::int64_t>(std::floor(y / t.period));
          return (cell % 2 == 0) ? 0.25 : 0.75;
        } else {
          const auto c = ramp(spec, t.seed);
          const double dx = x - 0.5 * spec.width;
          const double dy = y - 0.5 * spec.height;
          return std::clamp(0.5 + c.gx * dx + c.gy * dy + c.k * (dx * dx - dy * dy), 0.0, 1.0);
        }
      },
      spec.texture_model);
}

Scene render(const SceneSpec& spec) {
  spec.validate();
  const Intrinsics& K = spec.intrinsics;

  DepthMap depth(spec.width, spec.height, 0.0);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const double d = depth_at(spec, x, y);
      if (!(d > 0.0) || !std::isfinite(d)) {
        throw InvalidArgument(fmt::format("depth model yields depth {} at pixel ({}, {})", d, x, y));
      }
      depth.set(x, y, static_cast<double>(static_cast<float>(d)));
    }
  }

  Scene scene;
  scene.ground_truth = se3::exp(spec.motion);
  scene.flow = camera::flow_from_pose(depth, scene.ground_truth, K);
  scene.depth = depth;

  std::vector<std::size_t> valid;
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x)
      if (scene.flow.valid(x, y)) valid.push_back(static_cast<std::size_t>(y) * spec.width + x);

  if (spec.noise_sigma > 0.0) {
    SplitMix64 rng(spec.seed ^ kNoiseStream);
    const double info = -2.0 * std::log(spec.noise_sigma);
    for (const std::size_t idx : valid) {
      const int x = static_cast<int>(idx % spec.width);
      const int y = static_cast<int>(idx / spec.width);
      scene.flow.flow.at(x, y, 0) += spec.noise_sigma * rng.gaussian();
      scene.flow.flow.at(x, y, 1) += spec.noise_sigma * rng.gaussian();
      scene.flow.info.at(x, y, 0) = info;
      scene.flow.info.at(x, y, 2) = info;
    }
  }

  const auto n_out = static_cast<std::size_t>(std::llround(spec.outlier_fraction * static_cast<double>(valid.size())));
  if (n_out > 0) {
    SplitMix64 rng(spec.seed ^ kOutlierStream);
    std::vector<std::size_t> pool = valid;
    for (std::size_t k = 0; k < n_out; ++k) {
      const std::size_t pick = k + static_cast<std::size_t>(rng.below(pool.size() - k));
      std::swap(pool[k], pool[pick]);
    }
    scene.outliers.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_out));
    std::sort(scene.outliers.begin(), scene.outliers.end());
    const double M = spec.outlier_magnitude;
    for (const std::size_t idx : scene.outliers) {
      const int x = static_cast<int>(idx % spec.width);
      const int y = static_cast<int>(idx / spec.width);
      scene.flow.flow.at(x, y, 0) += rng.uniform(-M, M);
      scene.flow.flow.at(x, y, 1) += rng.uniform(-M, M);
      scene.flow.info.at(x, y, 0) = -6.0;
      scene.flow.info.at(x, y, 1) = 0.0;
      scene.flow.info.at(x, y, 2) = -6.0;
    }
  }

  scene.image1 = ImageRaster(spec.width, spec.height, 1);
  scene.image2 = ImageRaster(spec.width, spec.height, 1);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      scene.image1.at(x, y) = texture_at(spec, x, y);
      const Eigen::Vector2d src = inverse_map(spec, scene.ground_truth, {x, y});
      scene.image2.at(x, y) = texture_at(spec, src.x(), src.y());
    }
  }
  return scene;
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

void write_motion(const std::filesystem::path& path, const MotionVector& xi) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out << fmt::format("{:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g}\n", xi[0], xi[1], xi[2], xi[3], xi[4], xi[5]);
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

MotionVector read_motion(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open motion file '{}'", path.string()));
  Vector6d v;
  for (int i = 0; i < 6; ++i) {
    if (!(in >> v[i])) throw FormatError(fmt::format("'{}': expected 6 numbers", path.string()));
  }
  return MotionVector(v);
}

Manifest write_scene(const SceneSpec& spec, const std::filesystem::path& dir) {
  const Scene scene = render(spec);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));

  engr::write(dir / kDepthFile, scene.depth.raster());
  engr::write(dir / kFlowFile, scene.flow.to_raster());
  engr::write(dir / kImage1File, scene.image1);
  engr::write(dir / kImage2File, scene.image2);
  spec.intrinsics.write(dir / kIntrinsicsFile);
  write_motion(dir / kMotionFile, spec.motion);

  Manifest m;
  m.path = dir / kManifestFile;
  std::ostringstream text;
  for (const char* name : {kDepthFile, kFlowFile, kImage1File, kImage2File, kIntrinsicsFile, kMotionFile}) {
    const std::string hash = sha256_hex(read_file_bytes(dir / name));
    m.entries.push_back({name, hash});
    text << name << ' ' << hash << '\n';
  }
  const std::string s = text.str();
  write_file_bytes(m.path, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  return m;
}

}  // namespace synth
}  // namespace flowpose
