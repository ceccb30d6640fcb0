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

#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "flowpose/errors.hpp"
#include "flowpose/info_matrix.hpp"
#include "flowpose/irls_solver.hpp"
#include "flowpose/losses.hpp"
#include "flowpose/synth.hpp"
#include "flowpose/trajectory.hpp"

namespace flowpose::cli {

namespace {

std::vector<double> parse_list(const std::string& text, std::size_t expected, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument(fmt::format("{}: '{}' is not a number", what, item));
    }
  }
  if (expected != 0 && out.size() != expected) {
    throw InvalidArgument(fmt::format("{}: expected {} comma-separated values, got {}", what, expected, out.size()));
  }
  return out;
}

MotionVector parse_motion(const std::string& text, const std::string& what) {
  const auto v = parse_list(text, 6, what);
  return MotionVector(v[0], v[1], v[2], v[3], v[4], v[5]);
}

std::pair<std::string, std::string> split_model(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) return {text, ""};
  return {text.substr(0, colon), text.substr(colon + 1)};
}

DepthModel parse_depth_model(const std::string& text) {
  const auto [kind, args] = split_model(text);
  if (kind == "constant") return ConstantDepth{parse_list(args, 1, "--depth constant")[0]};
  if (kind == "plane") {
    const auto v = parse_list(args, 4, "--depth plane");
    return PlaneDepth{Eigen::Vector3d(v[0], v[1], v[2]), v[3]};
  }
  if (kind == "smooth") {
    const auto v = parse_list(args, 2, "--depth smooth");
    return SmoothRandomDepth{static_cast<std::uint64_t>(v[0]), v[1]};
  }
  throw InvalidArgument(fmt::format("unknown depth model '{}' (constant:D | plane:nx,ny,nz,offset | smooth:seed,amp)", text));
}

TextureModel parse_texture_model(const std::string& text) {
  const auto [kind, args] = split_model(text);
  if (kind == "checker") return CheckerTexture{parse_list(args, 1, "--texture checker")[0]};
  if (kind == "smooth") return SmoothRandomTexture{static_cast<std::uint64_t>(parse_list(args, 1, "--texture smooth")[0])};
  throw InvalidArgument(fmt::format("unknown texture model '{}' (checker:period | smooth:seed)", text));
}

std::string fmt_num(double v) { return fmt::format("{:.17g}", v); }

// Reads `key = value` lines and turns them into option tokens for `sub`.
// Unknown keys are usage errors.
std::vector<std::string> config_tokens(const std::string& path, const CLI::App& sub) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open config file '{}'", path));
  std::vector<std::string> tokens;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument(fmt::format("{}:{}: expected `key = value`", path, line_no));
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config") {
      throw InvalidArgument(fmt::format("{}:{}: unknown config key '{}'", path, line_no, key));
    }
    if (opt->get_expected_max() == 0) {
      if (value == "true" || value == "1") {
        tokens.push_back("--" + key);
      } else if (value != "false" && value != "0") {
        throw InvalidArgument(fmt::format("{}:{}: '{}' expects true or false", path, line_no, key));
      }
    } else {
      tokens.push_back("--" + key);
      tokens.push_back(value);
    }
  }
  return tokens;
}

struct SynthArgs {
  int width = 64;
  int height = 48;
  std::optional<double> fx, fy, cx, cy;
  std::string depth = "constant:2.0";
  std::string texture = "checker:8";
  std::string motion = "0,0,0,0,0,0";
  double outliers = 0.0;
  double outlier_mag = 50.0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string out;
};

struct SolveArgs {
  std::string scene;
  std::string depth, flow, intrinsics;
  std::string residuals;
  std::string seed_xi = "0,0,0,0,0,0";
  SolverConfig config;
  bool no_confidence = false;
  bool pretty = false;
};

struct EvalArgs {
  std::string est, gt;
  std::size_t rpe_delta = 1;
  double max_dt = 0.02;
  bool pretty = false;
};

struct LossArgs {
  std::string name;
  std::string pred, gt, depth, left, right, depth_left, depth_right, pred_left, pred_right, gt_left, gt_right;
  std::string image1, image2, intrinsics, xi, gt_xi, flow, gt_flow;
  double baseline = 0.0;
  LossWeights weights;
};

struct ChainArgs {
  std::string input, out;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SceneSpec spec;
  spec.width = a.width;
  spec.height = a.height;
  spec.intrinsics = SceneSpec::default_intrinsics(a.width, a.height);
  if (a.fx) spec.intrinsics.fx = *a.fx;
  if (a.fy) spec.intrinsics.fy = *a.fy;
  if (a.cx) spec.intrinsics.cx = *a.cx;
  if (a.cy) spec.intrinsics.cy = *a.cy;
  spec.depth_model = parse_depth_model(a.depth);
  spec.texture_model = parse_texture_model(a.texture);
  spec.motion = parse_motion(a.motion, "--motion");
  spec.outlier_fraction = a.outliers;
  spec.outlier_magnitude = a.outlier_mag;
  spec.noise_sigma = a.noise;
  spec.seed = a.seed;
  const auto manifest = synth::write_scene(spec, a.out);
  out << manifest.path.string() << '\n';
  return kOk;
}

int cmd_solve(SolveArgs a, std::ostream& out) {
  if (!a.scene.empty()) {
    const std::filesystem::path dir(a.scene);
    if (a.depth.empty()) a.depth = (dir / synth::kDepthFile).string();
    if (a.flow.empty()) a.flow = (dir / synth::kFlowFile).string();
    if (a.intrinsics.empty()) a.intrinsics = (dir / synth::kIntrinsicsFile).string();
  }
  if (a.depth.empty() || a.flow.empty() || a.intrinsics.empty()) {
    throw InvalidArgument("solve needs --depth, --flow and --intrinsics (or --scene)");
  }
  a.config.use_confidence = !a.no_confidence;
  a.config.seed_xi = parse_motion(a.seed_xi, "--seed-xi");

  const Intrinsics K = Intrinsics::read(a.intrinsics);
  const DepthMap depth(engr::read(a.depth));
  const FlowField flow = FlowField::from_raster(engr::read(a.flow));
  const SolveResult r = irls::solve(depth, flow, K, a.config);

  if (!a.residuals.empty()) {
    engr::write(a.residuals, irls::compute_residuals(depth, flow, r.xi, K, a.config).residuals);
  }
  if (a.pretty) {
    out << fmt::format("xi          {:>14.6e} {:>14.6e} {:>14.6e}\n", r.xi[0], r.xi[1], r.xi[2]);
    out << fmt::format("            {:>14.6e} {:>14.6e} {:>14.6e}\n", r.xi[3], r.xi[4], r.xi[5]);
    out << fmt::format("iterations  {}\nconverged   {}\nfinal cost  {:.6e}\n", r.iterations,
                       r.converged ? "yes" : "no", r.final_cost);
    return kOk;
  }
  std::string line;
  for (int i = 0; i < 6; ++i) line += fmt_num(r.xi[i]) + ' ';
  line += fmt::format("{} {} {}", r.iterations, r.converged ? 1 : 0, fmt_num(r.final_cost));
  out << line << '\n';
  return kOk;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Trajectory est = traj::read_tum(a.est);
  const Trajectory gt = traj::read_tum(a.gt);
  const EvalReport r = traj::evaluate(est, gt, a.rpe_delta, a.max_dt);

  std::string scales = "none";
  std::optional<ScaleQuantiles> q;
  if (!r.per_pose_scales.empty()) {
    q = traj::quantiles(r.per_pose_scales);
    scales = fmt::format("{:.9f} {:.9f} {:.9f} {:.9f} {:.9f}", q->min, q->q1, q->median, q->q3, q->max);
  }
  if (a.pretty) {
    out << fmt::format("ATE (m)        {:.6f}\nRPE (m)        {:.6f}\nRPE (deg)      {:.6f}\nmatched        {}\n",
                       r.ate_rmse, r.rpe_trans, r.rpe_rot, r.matched_count);
    out << fmt::format("global scale   {:.6f}\n", r.scale);
    if (q) {
      out << fmt::format("pose scales    min {:.4f}  q1 {:.4f}  median {:.4f}  q3 {:.4f}  max {:.4f}\n", q->min,
                         q->q1, q->median, q->q3, q->max);
    }
    return kOk;
  }
  out << fmt::format("{:.9f} {:.9f} {:.9f} matched {} scales {}\n", r.ate_rmse, r.rpe_trans, r.rpe_rot,
                     r.matched_count, scales);
  return kOk;
}

const std::string& need(const std::string& value, const char* flag, const std::string& loss_name) {
  if (value.empty()) throw InvalidArgument(fmt::format("loss {} needs {}", loss_name, flag));
  return value;
}

DepthMap read_depth(const std::string& path) { return DepthMap(engr::read(path)); }

int cmd_loss(const LossArgs& a, std::ostream& out) {
  const std::string& n = a.name;
  double value = 0.0;
  if (n == "berhu") {
    value = loss::berhu(read_depth(need(a.pred, "--pred", n)), read_depth(need(a.gt, "--gt", n)));
  } else if (n == "smoothness") {
    value = loss::smoothness(read_depth(need(a.depth, "--depth", n)));
  } else if (n == "photometric-lr") {
    value = loss::photometric_lr(engr::read(need(a.left, "--left", n)), engr::read(need(a.right, "--right", n)),
                                 read_depth(need(a.depth_left, "--depth-left", n)),
                                 read_depth(need(a.depth_right, "--depth-right", n)), a.baseline,
                                 Intrinsics::read(need(a.intrinsics, "--intrinsics", n)));
  } else if (n == "combined") {
    const auto pl = read_depth(need(a.pred_left, "--pred-left", n));
    const auto pr = read_depth(need(a.pred_right, "--pred-right", n));
    const auto gl = read_depth(need(a.gt_left, "--gt-left", n));
    const auto gr = read_depth(need(a.gt_right, "--gt-right", n));
    const auto il = engr::read(need(a.left, "--left", n));
    const auto ir = engr::read(need(a.right, "--right", n));
    const auto K = Intrinsics::read(need(a.intrinsics, "--intrinsics", n));
    value = loss::combined_semisupervised({pl, pr, gl, gr, il, ir, a.baseline, K}, a.weights);
  } else if (n == "pose-photometric") {
    value = loss::pose_photometric(engr::read(need(a.image1, "--image1", n)), engr::read(need(a.image2, "--image2", n)),
                                   read_depth(need(a.depth, "--depth", n)), parse_motion(need(a.xi, "--xi", n), "--xi"),
                                   Intrinsics::read(need(a.intrinsics, "--intrinsics", n)));
  } else if (n == "pose") {
    value = loss::pose_loss(parse_motion(need(a.xi, "--xi", n), "--xi"),
                            se3::exp(parse_motion(need(a.gt_xi, "--gt-xi", n), "--gt-xi")));
  } else if (n == "flownll") {
    value = info::flow_nll_map(FlowField::from_raster(engr::read(need(a.flow, "--flow", n))),
                               engr::read(need(a.gt_flow, "--gt-flow", n)));
  } else {
    throw InvalidArgument(fmt::format(
        "unknown loss '{}' (berhu | smoothness | photometric-lr | combined | pose-photometric | pose | flownll)", n));
  }
  out << fmt::format("{:.12g}\n", value);
  return kOk;
}

int cmd_chain(const ChainArgs& a, std::ostream& out) {
  std::ifstream in(a.input);
  if (!in) throw IoError(fmt::format("cannot open '{}'", a.input));
  std::vector<RelativeMotion> rel;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    double v[7];
    for (double& x : v) {
      if (!(ss >> x)) throw FormatError(fmt::format("{}:{}: expected `timestamp vx vy vz wx wy wz`", a.input, line_no));
    }
    rel.push_back({v[0], MotionVector(v[1], v[2], v[3], v[4], v[5], v[6])});
  }
  Trajectory t;
  try {
    t = traj::chain(rel);
  } catch (const InvalidArgument& e) {
    throw FormatError(fmt::format("{}: {}", a.input, e.what()));
  }
  traj::write_tum(std::filesystem::path(a.out), t);
  out << a.out << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"flowpose: pose from dense flow and depth, losses and trajectory evaluation"};
  app.name("flowpose");
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Render a deterministic synthetic scene");
  synth->add_option("--width", sa.width, "Raster width in pixels");
  synth->add_option("--height", sa.height, "Raster height in pixels");
  synth->add_option("--fx", sa.fx, "Focal length x (default: width)");
  synth->add_option("--fy", sa.fy, "Focal length y (default: width)");
  synth->add_option("--cx", sa.cx, "Principal point x (default: raster centre)");
  synth->add_option("--cy", sa.cy, "Principal point y (default: raster centre)");
  synth->add_option("--depth", sa.depth, "constant:D | plane:nx,ny,nz,offset | smooth:seed,amplitude");
  synth->add_option("--texture", sa.texture, "checker:period | smooth:seed");
  synth->add_option("--motion", sa.motion, "vx,vy,vz,wx,wy,wz");
  synth->add_option("--outliers", sa.outliers, "Outlier fraction in [0, 1)");
  synth->add_option("--outlier-mag", sa.outlier_mag, "Outlier flow corruption bound (pixels)");
  synth->add_option("--noise", sa.noise, "Gaussian flow noise sigma (pixels)");
  synth->add_option("--seed", sa.seed, "Random seed");
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_option("--config", "key = value config file");

  SolveArgs so;
  auto* solve = app.add_subcommand("solve", "Estimate relative pose from depth and flow");
  solve->add_option("--scene", so.scene, "Scene directory (supplies depth, flow and intrinsics defaults)");
  solve->add_option("--depth", so.depth, "Depth raster (ENGR, 1 channel)");
  solve->add_option("--flow", so.flow, "Flow raster (ENGR, 5 channels)");
  solve->add_option("--intrinsics", so.intrinsics, "Intrinsics file");
  solve->add_option("--max-iter", so.config.max_iterations, "Maximum iterations");
  solve->add_option("--tol", so.config.convergence_tol, "Convergence threshold on |beta|");
  solve->add_option("--min-valid", so.config.min_valid_pixels, "Minimum valid pixels");
  solve->add_option("--damping", so.config.damping, "Diagonal damping of the normal equations");
  solve->add_option("--seed-xi", so.seed_xi, "Initial motion vx,vy,vz,wx,wy,wz");
  solve->add_flag("--no-confidence", so.no_confidence, "Ignore flow confidences");
  solve->add_flag("--single-iteration", so.config.single_iteration, "Stop after one Gauss-Newton step");
  solve->add_flag("--full-info-block", so.config.full_info_block, "Weight with the full 2x2 information block");
  solve->add_option("--residuals", so.residuals, "Write the per-pixel residual raster here");
  solve->add_flag("--pretty", so.pretty, "Human-readable output");
  solve->add_option("--config", "key = value config file");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval-traj", "Score an estimated TUM trajectory against ground truth");
  eval->add_option("--est", ea.est, "Estimated trajectory")->required();
  eval->add_option("--gt", ea.gt, "Ground-truth trajectory")->required();
  eval->add_option("--rpe-delta", ea.rpe_delta, "RPE frame step")->check(CLI::PositiveNumber);
  eval->add_option("--max-dt", ea.max_dt, "Timestamp association window (s)")->check(CLI::PositiveNumber);
  eval->add_flag("--pretty", ea.pretty, "Human-readable output");
  eval->add_option("--config", "key = value config file");

  LossArgs la;
  auto* lossc = app.add_subcommand("loss", "Evaluate a loss on raster files");
  lossc->add_option("name", la.name, "berhu | smoothness | photometric-lr | combined | pose-photometric | pose | flownll")
      ->required();
  lossc->add_option("--pred", la.pred, "Predicted depth");
  lossc->add_option("--gt", la.gt, "Ground-truth depth");
  lossc->add_option("--depth", la.depth, "Depth map");
  lossc->add_option("--left", la.left, "Left image");
  lossc->add_option("--right", la.right, "Right image");
  lossc->add_option("--depth-left", la.depth_left, "Left depth");
  lossc->add_option("--depth-right", la.depth_right, "Right depth");
  lossc->add_option("--pred-left", la.pred_left, "Predicted left depth");
  lossc->add_option("--pred-right", la.pred_right, "Predicted right depth");
  lossc->add_option("--gt-left", la.gt_left, "Ground-truth left depth");
  lossc->add_option("--gt-right", la.gt_right, "Ground-truth right depth");
  lossc->add_option("--image1", la.image1, "First image");
  lossc->add_option("--image2", la.image2, "Second image");
  lossc->add_option("--intrinsics", la.intrinsics, "Intrinsics file");
  lossc->add_option("--xi", la.xi, "Motion vx,vy,vz,wx,wy,wz");
  lossc->add_option("--gt-xi", la.gt_xi, "Ground-truth motion vx,vy,vz,wx,wy,wz");
  lossc->add_option("--flow", la.flow, "Predicted flow (5 channels)");
  lossc->add_option("--gt-flow", la.gt_flow, "Reference flow (>= 2 channels)");
  lossc->add_option("--baseline", la.baseline, "Stereo baseline (m)");
  lossc->add_option("--lambda1", la.weights.lambda1, "berHu weight");
  lossc->add_option("--lambda2", la.weights.lambda2, "Stereo photometric weight");
  lossc->add_option("--lambda3", la.weights.lambda3, "Smoothness weight");
  lossc->add_option("--config", "key = value config file");

  ChainArgs ca;
  auto* chain = app.add_subcommand("chain", "Chain relative motions into a TUM trajectory");
  chain->add_option("--input", ca.input, "Lines of `timestamp vx vy vz wx wy wz`")->required();
  chain->add_option("--out", ca.out, "Output TUM file")->required();

  try {
    // Config-file values are injected right after the subcommand so that
    // flags given on the command line, which come later, take precedence.
    std::vector<std::string> argv_store = args;
    if (!argv_store.empty()) {
      CLI::App* sub = app.get_subcommand_no_throw(argv_store[0]);
      if (sub != nullptr) {
        for (std::size_t i = 1; i < argv_store.size(); ++i) {
          std::string path;
          std::size_t erase = 0;
          if (argv_store[i] == "--config" && i + 1 < argv_store.size()) {
            path = argv_store[i + 1];
            erase = 2;
          } else if (argv_store[i].rfind("--config=", 0) == 0) {
            path = argv_store[i].substr(9);
            erase = 1;
          }
          if (erase == 0) continue;
          argv_store.erase(argv_store.begin() + static_cast<std::ptrdiff_t>(i),
                           argv_store.begin() + static_cast<std::ptrdiff_t>(i + erase));
          const auto tokens = config_tokens(path, *sub);
          argv_store.insert(argv_store.begin() + 1, tokens.begin(), tokens.end());
          break;
        }
      }
    }
    std::vector<const char*> argv{"flowpose"};
    for (const auto& s : argv_store) argv.push_back(s.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kOk : kUsage;
    }

    if (synth->parsed()) return cmd_synth(sa, out);
    if (solve->parsed()) return cmd_solve(so, out);
    if (eval->parsed()) return cmd_eval(ea, out);
    if (lossc->parsed()) return cmd_loss(la, out);
    if (chain->parsed()) return cmd_chain(ca, out);
    return kUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return kIo;
  } catch (const InsufficientData& e) {
    err << "insufficient data: " << e.what() << '\n';
    return kInsufficientData;
  } catch (const DegenerateGeometry& e) {
    err << "degenerate geometry: " << e.what() << '\n';
    return kDegenerate;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
    return kDegenerate;
  } catch (const CheiralityError& e) {
    err << "cheirality error: " << e.what() << '\n';
    return kDegenerate;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIo;
  }
}

}  // namespace flowpose::cli
