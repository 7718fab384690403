#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "helipad/image.hpp"
#include "helipad/servo.hpp"
#include "helipad/track.hpp"

namespace helipad {

/// Vehicle pose in the world frame (z up, z = altitude above the pad plane).
struct QuadState {
  double x = 0.0;
  double y = 0.0;
  double z = 1.0;
  double yaw = 0.0;

  Eigen::Vector3d position() const { return {x, y, z}; }
  friend bool operator==(const QuadState&, const QuadState&) = default;
};

/// Analytic helipad: dark disk inside a bright ring, bright H on the disk.
/// The H bars run along the pad x axis. Lengths in meters, intensities 8-bit.
struct HelipadSpec {
  double outer_radius = 0.40;
  double inner_radius = 0.36;
  double bar_width = 0.1044;
  double bar_height = 0.4608;
  double h_width = 0.3312;
  double crossbar = 0.0864;
  double background = 110.0;
  double pad = 40.0;
  double ink = 220.0;
  /// Amplitude of the deterministic surface texture (ground in world coordinates, pad in pad
  /// coordinates); 0 renders flat surfaces.
  double texture = 20.0;

  void validate() const;
  /// H area over the inner-disk area.
  double area_ratio() const;
  /// Pattern intensity at pad-frame point (px, py).
  double sample(double px, double py) const;
  bool in_h(double px, double py) const;
  /// The 12 H corners in pad coordinates (no particular order).
  std::array<Eigen::Vector2d, 12> corners() const;
};

/// Pad placement on the ground plane: position, heading and a constant drift velocity.
struct PadPose {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double vx = 0.0;
  double vy = 0.0;

  PadPose at(double t) const { return {x + vx * t, y + vy * t, yaw, vx, vy}; }
  Eigen::Vector2d to_pad(double wx, double wy) const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    const double dx = wx - x, dy = wy - y;
    return {c * dx + s * dy, -s * dx + c * dy};
  }
  Eigen::Vector3d to_world(const Eigen::Vector2d& p) const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    return {x + c * p.x() - s * p.y(), y + s * p.x() + c * p.y(), 0.0};
  }
};

struct PinholeCamera {
  CameraIntrinsics k;
  int width = 640;
  int height = 368;
  Mounting mount = Mounting::camera_down();

  void validate() const;
};

Eigen::Matrix3d yaw_rotation(double yaw);

/// Two-octave lattice noise in [-1, 1] (cells of 4 cm and 1.5 cm), fixed by `salt`.
double surface_texture(double x, double y, std::uint32_t salt);

/// World point into the camera frame of a vehicle at `state`.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> world_to_camera(const Eigen::Matrix<Scalar, 3, 1>& p_world, const QuadState& state,
                                             const Mounting& mount) {
  const Eigen::Matrix<Scalar, 3, 3> r = yaw_rotation(state.yaw).cast<Scalar>();
  const Eigen::Matrix<Scalar, 3, 1> body = r.transpose() * (p_world - state.position().cast<Scalar>());
  return mount.matrix().cast<Scalar>().transpose() * body;
}

/// Pinhole projection; nullopt when the point is on or behind the image plane.
std::optional<PointPx> project_point(const Eigen::Vector3d& p_world, const QuadState& state, const PinholeCamera& cam);

struct RenderOptions {
  int supersample = 2;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

struct NoOverlay {
  double operator()(double, double) const { return 0.0; }
};

/// Ray-casts pixels onto the plane z = 0 and samples `sampler(wx, wy)`, which must be
/// piecewise constant. Pixels whose centre value differs from any 8-neighbour are averaged
/// over an n x n sub-pixel grid. `overlay(wx, wy)` is smooth content added on top; it is
/// sampled on a 2-pixel lattice and interpolated. Rays that miss the plane read 0.
template <typename Sampler, typename Overlay = NoOverlay>
GrayImage render_plane(const QuadState& state, const PinholeCamera& cam, Sampler&& sampler,
                       const RenderOptions& opt = {}, Overlay&& overlay = {}) {
  cam.validate();
  if (!(state.z > 0.1)) throw InvalidArgument("render: altitude must exceed 0.1 m");
  if (opt.supersample < 1) throw InvalidArgument("render: supersample must be >= 1");
  const Eigen::Matrix3d r = yaw_rotation(state.yaw) * cam.mount.matrix();
  const Eigen::Vector3d o = state.position();
  const int w = cam.width, h = cam.height;
  const int n = opt.supersample;
  // Ray direction is affine in the pixel position.
  const Eigen::Vector3d cu = r.col(0) / cam.k.fx;
  const Eigen::Vector3d cv = r.col(1) / cam.k.fy;
  const Eigen::Vector3d c0 = r.col(2) - cam.k.cx * cu - cam.k.cy * cv;
  auto cast = [&](double su, double sv, auto&& f) {
    const Eigen::Vector3d d = c0 + su * cu + sv * cv;
    if (d.z() >= 0.0) return 0.0;
    const double t = -o.z() / d.z();
    return static_cast<double>(f(o.x() + t * d.x(), o.y() + t * d.y()));
  };

  const std::size_t npx = static_cast<std::size_t>(w) * h;
  std::vector<double> centre(npx), detail(npx, 0.0);
  for (int v = 0; v < h; ++v) {
    const Eigen::Vector3d base = c0 + v * cv;
    double* row = &centre[static_cast<std::size_t>(v) * w];
    for (int u = 0; u < w; ++u) {
      const double dz = base.z() + u * cu.z();
      if (dz >= 0.0) {
        row[u] = 0.0;
        continue;
      }
      const double t = -o.z() / dz;
      row[u] = static_cast<double>(sampler(o.x() + t * (base.x() + u * cu.x()), o.y() + t * (base.y() + u * cu.y())));
    }
  }
  if constexpr (!std::is_same_v<std::decay_t<Overlay>, NoOverlay>) {
    // The overlay is smooth: sample it every other pixel and interpolate.
    const int gw = w / 2 + 2, gh = h / 2 + 2;
    std::vector<double> grid(static_cast<std::size_t>(gw) * gh);
    for (int j = 0; j < gh; ++j) {
      for (int i = 0; i < gw; ++i) grid[static_cast<std::size_t>(j) * gw + i] = cast(2 * i, 2 * j, overlay);
    }
    for (int v = 0; v < h; ++v) {
      const int j = v / 2;
      const double b = 0.5 * (v % 2);
      for (int u = 0; u < w; ++u) {
        const int i = u / 2;
        const double a = 0.5 * (u % 2);
        const double* g0 = &grid[static_cast<std::size_t>(j) * gw + i];
        const double* g1 = g0 + gw;
        detail[static_cast<std::size_t>(v) * w + u] =
            (1 - b) * ((1 - a) * g0[0] + a * g0[1]) + b * ((1 - a) * g1[0] + a * g1[1]);
      }
    }
  }
  auto differs = [&](int u, int v) {
    const double c = centre[static_cast<std::size_t>(v) * w + u];
    if (u > 0 && v > 0 && u + 1 < w && v + 1 < h) {
      for (int dy = -1; dy <= 1; ++dy) {
        const double* row = &centre[static_cast<std::size_t>(v + dy) * w + u];
        if (row[-1] != c || row[0] != c || row[1] != c) return true;
      }
      return false;
    }
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int x = std::clamp(u + dx, 0, w - 1), y = std::clamp(v + dy, 0, h - 1);
        if (centre[static_cast<std::size_t>(y) * w + x] != c) return true;
      }
    }
    return false;
  };
  GrayImage img(w, h);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> noise(0.0, opt.noise_sigma > 0.0 ? opt.noise_sigma : 1.0);
  for (int v = 0; v < h; ++v) {
    std::uint8_t* out = img.row(v);
    for (int u = 0; u < w; ++u) {
      const std::size_t i = static_cast<std::size_t>(v) * w + u;
      double val = centre[i];
      if (n > 1 && differs(u, v)) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
          for (int k = 0; k < n; ++k) acc += cast(u - 0.5 + (k + 0.5) / n, v - 0.5 + (j + 0.5) / n, sampler);
        }
        val = acc / (n * n);
      }
      val += detail[i];
      if (opt.noise_sigma > 0.0) val += noise(rng);
      // Non-negative after the clamp, so truncation of val + 0.5 rounds half up.
      out[u] = static_cast<std::uint8_t>(std::clamp(val, 0.0, 255.0) + 0.5);
    }
  }
  return img;
}

GrayImage render_view(const QuadState& state, const PinholeCamera& cam, const HelipadSpec& pad,
                      const PadPose& pose = {}, const RenderOptions& opt = {});

/// Pixel positions of the pad's 12 H corners (pad-frame order of HelipadSpec::corners).
std::vector<std::optional<PointPx>> project_corners(const QuadState& state, const PinholeCamera& cam,
                                                    const HelipadSpec& pad, const PadPose& pose = {});

/// Kinematic step: body velocity rotated by yaw into the world, Euler-integrated.
QuadState step_dynamics(const QuadState& state, const ControlVelocity& v_body, double dt);

/// Wraps to (-pi, pi].
double wrap_angle(double a);

struct SimConfig {
  double dt = 0.033;
  int max_steps = 1500;
  double pixel_noise = 0.0;
  double depth_noise = 0.0;
  std::uint64_t seed = 1;
  int diverge_frames = 30;
  int supersample = 2;
  QuadState reference{0.0, 0.0, 1.2, 0.0};
  PadPose pad_pose;
};

struct LoopConfig {
  SupervisorConfig supervisor;
  ServoConfig servo;
  SimConfig sim;
  /// When absent, s* is captured from a noiseless render at `sim.reference`.
  std::optional<FeatureVector> s_star;
};

enum class Outcome { Landed, Diverged, Timeout };
std::string to_string(Outcome o);

struct SimRecord {
  double t = 0.0;
  double err = 0.0;  // NaN on frames without features
  ControlVelocity v;  // body frame, as applied
  QuadState state;    // state at which the frame was rendered
  Mode mode = Mode::Detecting;
};

struct SimTrace {
  std::vector<SimRecord> records;
  Outcome outcome = Outcome::Timeout;
  double land_eps = 0.0;
  QuadState final_state;
  FeatureVector s_star = FeatureVector::Zero();

  void write_csv(const std::filesystem::path& path) const;
  std::string csv() const;
};

class SetupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Noiseless capture of the reference feature vector at `pose`.
FeatureVector capture_reference(const QuadState& pose, const PinholeCamera& cam, const HelipadSpec& pad,
                                const PadPose& pad_pose, const DetectConfig& cfg, int supersample = 2);

SimTrace run_closed_loop(const QuadState& init, const HelipadSpec& pad, const PinholeCamera& cam,
                         const LoopConfig& cfg);

}  // namespace helipad
