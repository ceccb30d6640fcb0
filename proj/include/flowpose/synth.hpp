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

// Deterministic synthetic scenes with exact depth, motion, flow and
// confidences. Everything random is drawn from SplitMix64 streams derived
// from the scene seed, in a fixed order, so a spec always renders to the same
// bits.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "flowpose/camera.hpp"
#include "flowpose/lie_se3.hpp"
#include "flowpose/raster.hpp"

namespace flowpose {

/// SplitMix64 (Steele, Lea, Flood). Portable and bit-reproducible.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller.
  double gaussian();

 private:
  std::uint64_t state_;
};

struct ConstantDepth {
  double depth = 2.0;
};
/// Plane n . X = offset in the camera frame of view 1.
struct PlaneDepth {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double offset = 2.0;
};
/// 2 m base depth plus amplitude times a C1 lattice noise in [-1, 1].
struct SmoothRandomDepth {
  std::uint64_t seed = 0;
  double amplitude = 0.5;
};
using DepthModel = std::variant<ConstantDepth, PlaneDepth, SmoothRandomDepth>;

/// Two-level checkerboard (0.25 / 0.75) with square side `period` pixels.
struct CheckerTexture {
  double period = 8.0;
};
/// Gentle random ramp: affine intensity plus a small quadratic term, staying
/// well inside (0, 1). Bilinear interpolation of it is exact to ~1e-7.
struct SmoothRandomTexture {
  std::uint64_t seed = 0;
};
using TextureModel = std::variant<CheckerTexture, SmoothRandomTexture>;

struct SceneSpec {
  int width = 64;
  int height = 48;
  Intrinsics intrinsics = default_intrinsics(64, 48);
  DepthModel depth_model = ConstantDepth{};
  TextureModel texture_model = CheckerTexture{};
  MotionVector motion;
  double outlier_fraction = 0.0;    // [0, 1)
  double outlier_magnitude = 50.0;  // pixels
  double noise_sigma = 0.0;         // pixels
  std::uint64_t seed = 0;

  /// fx = fy = width, principal point at the raster centre.
  static Intrinsics default_intrinsics(int width, int height);

  void validate() const;
};

struct Scene {
  DepthMap depth;
  FlowField flow;  // pixel units
  ImageRaster image1;
  ImageRaster image2;
  TransformSE3 ground_truth;
  std::vector<std::size_t> outliers;  // row-major pixel indices, ascending
};

namespace synth {

/// Depth of the model along the ray through continuous pixel (x, y).
double depth_at(const SceneSpec& spec, double x, double y);
/// Texture intensity of view 1 at continuous pixel (x, y).
double texture_at(const SceneSpec& spec, double x, double y);

/// Renders the scene. Depth is stored at float32 precision so that flows
/// computed from it match what a reader of the written scene sees.
/// Throws InvalidArgument for an invalid spec or a nonpositive depth.
Scene render(const SceneSpec& spec);

struct ManifestEntry {
  std::string filename;
  std::string sha256;
};

struct Manifest {
  std::filesystem::path path;
  std::vector<ManifestEntry> entries;
};

inline constexpr const char* kDepthFile = "depth.engr";
inline constexpr const char* kFlowFile = "flow.engr";
inline constexpr const char* kImage1File = "image1.engr";
inline constexpr const char* kImage2File = "image2.engr";
inline constexpr const char* kIntrinsicsFile = "intrinsics.txt";
inline constexpr const char* kMotionFile = "motion.txt";
inline constexpr const char* kManifestFile = "manifest.txt";

/// Renders and writes every artifact plus `manifest.txt` (one
/// `filename sha256hex` line per artifact) into `dir`.
Manifest write_scene(const SceneSpec& spec, const std::filesystem::path& dir);

std::string sha256_hex(std::span<const std::uint8_t> bytes);

/// `vx vy vz wx wy wz` on one line.
void write_motion(const std::filesystem::path& path, const MotionVector& xi);
MotionVector read_motion(const std::filesystem::path& path);

}  // namespace synth
}  // namespace flowpose
