#include "helipad/sim.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>

#include "helipad/io.hpp"

namespace helipad {

void HelipadSpec::validate() const {
  if (!(inner_radius > 0.0) || !(inner_radius < outer_radius)) {
    throw InvalidArgument("helipad: need 0 < inner_radius < outer_radius");
  }
  if (!(bar_width > 0.0) || !(bar_height > 0.0) || !(h_width > 0.0) || !(crossbar > 0.0)) {
    throw InvalidArgument("helipad: H dimensions must be > 0");
  }
  if (!(2.0 * bar_width < h_width)) throw InvalidArgument("helipad: bars overlap (2 * bar_width >= h_width)");
  if (!(crossbar < bar_height)) throw InvalidArgument("helipad: crossbar thicker than the bars are tall");
  if (!(std::hypot(0.5 * bar_height, 0.5 * h_width) < inner_radius)) {
    throw InvalidArgument("helipad: H does not fit inside the inner circle");
  }
  const double ratio = area_ratio();
  if (ratio < 0.2 || ratio > 0.4) {
    throw InvalidArgument("helipad: H area ratio " + std::to_string(ratio) + " outside [0.2, 0.4]");
  }
}

double HelipadSpec::area_ratio() const {
  const double gap = h_width - 2.0 * bar_width;
  const double area = 2.0 * bar_width * bar_height + gap * crossbar;
  return area / (std::numbers::pi * inner_radius * inner_radius);
}

bool HelipadSpec::in_h(double px, double py) const {
  const double ax = std::abs(px), ay = std::abs(py);
  const double a = 0.5 * h_width;
  const double inner = a - bar_width;
  if (ax <= 0.5 * bar_height && ay <= a && ay >= inner) return true;
  return ax <= 0.5 * crossbar && ay < inner;
}

double HelipadSpec::sample(double px, double py) const {
  const double r2 = px * px + py * py;
  if (r2 > outer_radius * outer_radius) return background;
  if (r2 > inner_radius * inner_radius) return ink;
  return in_h(px, py) ? ink : pad;
}

std::array<Eigen::Vector2d, 12> HelipadSpec::corners() const {
  const double hh = 0.5 * bar_height;
  const double a = 0.5 * h_width;
  const double ib = a - bar_width;
  const double t = 0.5 * crossbar;
  std::array<Eigen::Vector2d, 12> out;
  int k = 0;
  for (const double sx : {1.0, -1.0}) {
    for (const double sy : {1.0, -1.0}) {
      out[k] = {sx * hh, sy * a};
      out[4 + k] = {sx * hh, sy * ib};
      out[8 + k] = {sx * t, sy * ib};
      ++k;
    }
  }
  return out;
}

namespace {

constexpr int kLattice = 256;

std::uint32_t lattice_hash(std::uint32_t i, std::uint32_t j) {
  std::uint64_t h = i * 0x9E3779B97F4A7C15ULL ^ j * 0xC2B2AE3D27D4EB4FULL;
  h ^= h >> 31;
  h *= 0xBF58476D1CE4E5B9ULL;
  h ^= h >> 29;
  return static_cast<std::uint32_t>(h >> 32);
}

// Periodic table of lattice values in [-1, 1].
const std::vector<float>& lattice() {
  static const std::vector<float> table = [] {
    std::vector<float> t(kLattice * kLattice);
    for (int j = 0; j < kLattice; ++j) {
      for (int i = 0; i < kLattice; ++i) {
        t[j * kLattice + i] = static_cast<float>(lattice_hash(i, j) * (2.0 / 4294967295.0) - 1.0);
      }
    }
    return t;
  }();
  return table;
}

// Smoothstep-eased bilinear interpolation of the lattice; `salt` shifts the lattice origin.
inline double value_noise(const float* t, double x, double y, std::uint32_t salt) {
  // Truncate-and-fix floor; avoids a libm call per sample.
  long long ix = static_cast<long long>(x), iy = static_cast<long long>(y);
  ix -= x < static_cast<double>(ix);
  iy -= y < static_cast<double>(iy);
  const double fx = static_cast<double>(ix), fy = static_cast<double>(iy);
  const unsigned i = (static_cast<unsigned>(ix) + 37u * salt) & (kLattice - 1);
  const unsigned j = (static_cast<unsigned>(iy) + 101u * salt) & (kLattice - 1);
  const unsigned i1 = (i + 1) & (kLattice - 1), j1 = (j + 1) & (kLattice - 1);
  double tx = x - fx, ty = y - fy;
  tx = tx * tx * (3.0 - 2.0 * tx);
  ty = ty * ty * (3.0 - 2.0 * ty);
  const float* r0 = t + j * kLattice;
  const float* r1 = t + j1 * kLattice;
  const double top = r0[i] + tx * (r0[i1] - r0[i]);
  const double bot = r1[i] + tx * (r1[i1] - r1[i]);
  return top + ty * (bot - top);
}

}  // namespace

double surface_texture(double x, double y, std::uint32_t salt) {
  const float* t = lattice().data();
  return 0.6 * value_noise(t, x * 25.0, y * 25.0, salt) + 0.4 * value_noise(t, x * (1.0 / 0.015), y * (1.0 / 0.015), salt + 1);
}

void PinholeCamera::validate() const {
  k.validate();
  if (width < 64 || height < 64) throw InvalidArgument("camera: image size must be at least 64x64");
}

Eigen::Matrix3d yaw_rotation(double yaw) { return Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix(); }

std::optional<PointPx> project_point(const Eigen::Vector3d& p_world, const QuadState& state, const PinholeCamera& cam) {
  cam.validate();
  const Eigen::Vector3d pc = world_to_camera<double>(p_world, state, cam.mount);
  if (!(pc.z() > 0.0)) return std::nullopt;
  return PointPx{cam.k.fx * pc.x() / pc.z() + cam.k.cx, cam.k.fy * pc.y() / pc.z() + cam.k.cy};
}

GrayImage render_view(const QuadState& state, const PinholeCamera& cam, const HelipadSpec& pad, const PadPose& pose,
                      const RenderOptions& opt) {
  pad.validate();
  const double ro2 = pad.outer_radius * pad.outer_radius;
  const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
  auto pattern = [&](double wx, double wy) {
    const double dx = wx - pose.x, dy = wy - pose.y;
    const double px = c * dx + s * dy, py = -s * dx + c * dy;
    return px * px + py * py > ro2 ? pad.background : pad.sample(px, py);
  };
  if (pad.texture <= 0.0) return render_plane(state, cam, pattern, opt);
  // Ground texture is fixed in the world, pad texture moves with the pad.
  auto texture = [&](double wx, double wy) {
    const double dx = wx - pose.x, dy = wy - pose.y;
    const double px = c * dx + s * dy, py = -s * dx + c * dy;
    if (px * px + py * py > ro2) return pad.texture * surface_texture(wx, wy, 17);
    return pad.texture * surface_texture(px, py, 91);
  };
  return render_plane(state, cam, pattern, opt, texture);
}

std::vector<std::optional<PointPx>> project_corners(const QuadState& state, const PinholeCamera& cam,
                                                    const HelipadSpec& pad, const PadPose& pose) {
  std::vector<std::optional<PointPx>> out;
  for (const Eigen::Vector2d& c : pad.corners()) out.push_back(project_point(pose.to_world(c), state, cam));
  return out;
}

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  if (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  return a;
}

QuadState step_dynamics(const QuadState& state, const ControlVelocity& v_body, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("step_dynamics: dt must be > 0");
  const double c = std::cos(state.yaw), s = std::sin(state.yaw);
  QuadState next = state;
  next.x += (c * v_body.vx - s * v_body.vy) * dt;
  next.y += (s * v_body.vx + c * v_body.vy) * dt;
  next.z += v_body.vz * dt;
  next.yaw = wrap_angle(state.yaw + v_body.wz * dt);
  return next;
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::Landed: return "landed";
    case Outcome::Diverged: return "diverged";
    case Outcome::Timeout: return "timeout";
  }
  return "unknown";
}

std::string SimTrace::csv() const {
  std::string out = "t,err,vx,vy,vz,wz,x,y,z,yaw,mode\n";
  char buf[256];
  for (const SimRecord& r : records) {
    char err[32];
    if (std::isfinite(r.err)) {
      std::snprintf(err, sizeof err, "%.6f", r.err);
    } else {
      std::snprintf(err, sizeof err, "nan");
    }
    std::snprintf(buf, sizeof buf, "%.3f,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%s\n", r.t, err, r.v.vx, r.v.vy,
                  r.v.vz, r.v.wz, r.state.x, r.state.y, r.state.z, r.state.yaw, to_string(r.mode));
    out += buf;
  }
  return out;
}

void SimTrace::write_csv(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << csv();
}

FeatureVector capture_reference(const QuadState& pose, const PinholeCamera& cam, const HelipadSpec& pad,
                                const PadPose& pad_pose, const DetectConfig& cfg, int supersample) {
  const GrayImage frame = render_view(pose, cam, pad, pad_pose, {supersample, 0.0, 0});
  const DetectResult det = detect_helipad(frame, cfg);
  if (!det) throw SetupError("reference pose: helipad not detected (" + to_string(det.failure) + ")");
  return normalize_points(to_frame(det.detection->corners, det.detection->roi, cfg.extract.size), cam.k);
}

SimTrace run_closed_loop(const QuadState& init, const HelipadSpec& pad, const PinholeCamera& cam,
                         const LoopConfig& cfg) {
  pad.validate();
  cam.validate();
  cfg.servo.validate();
  const SimConfig& sc = cfg.sim;
  if (!(sc.dt > 0.0)) throw InvalidArgument("sim: dt must be > 0");
  if (sc.max_steps < 1) throw InvalidArgument("sim: max_steps must be >= 1");
  if (!(init.z > 0.1)) throw SetupError("initial altitude must exceed 0.1 m");

  SimTrace trace;
  trace.s_star =
      cfg.s_star ? *cfg.s_star : capture_reference(sc.reference, cam, pad, sc.pad_pose, cfg.supervisor.detect, sc.supersample);
  FeatureAssociator assoc(trace.s_star);
  SupervisorState sup;
  std::mt19937_64 depth_rng(sc.seed ^ 0xD1B54A32D192ED03ULL);
  std::normal_distribution<double> depth_noise(0.0, 1.0);
  std::vector<double> history;
  double eps = 0.0;
  bool have_eps = false;
  int missing = 0;
  QuadState st = init;

  for (int k = 0; k < sc.max_steps; ++k) {
    const double t = k * sc.dt;
    const RenderOptions ro{sc.supersample, sc.pixel_noise, sc.seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(k + 1)};
    const GrayImage frame = render_view(st, cam, pad, sc.pad_pose.at(t), ro);
    const SupervisorOutput out = supervisor_step(sup, frame, cfg.supervisor);
    if (k == 0 && !out.corners) throw SetupError("helipad not visible from the initial state");

    SimRecord rec{t, std::numeric_limits<double>::quiet_NaN(), {}, st, out.mode};
    if (out.corners) {
      const FeatureVector s = assoc.associate(normalize_points(*out.corners, cam.k));
      const FeatureError fe = compute_error(s, trace.s_star);
      if (!have_eps) {
        eps = landing_threshold(fe.norm, cfg.servo);
        have_eps = true;
      }
      double depth = st.z;
      if (sc.depth_noise > 0.0) depth += sc.depth_noise * depth_noise(depth_rng);
      depth = std::max(depth, 0.05);
      try {
        const ControlVelocity v_cam = control_law(stack_interaction(s, depth), fe.e, cfg.servo);
        rec.v = to_body_frame(v_cam, cam.mount);
      } catch (const DegenerateConfiguration&) {
        rec.v = {};
      }
      rec.err = fe.norm;
      history.push_back(fe.norm);
      missing = 0;
    } else {
      history.push_back(std::numeric_limits<double>::infinity());
      ++missing;
    }
    trace.records.push_back(rec);

    if (have_eps && landing_monitor(history, eps, cfg.servo.land_hold)) {
      trace.outcome = Outcome::Landed;
      trace.land_eps = eps;
      trace.final_state = st;
      return trace;
    }
    if (missing > sc.diverge_frames) {
      trace.outcome = Outcome::Diverged;
      trace.land_eps = eps;
      trace.final_state = st;
      return trace;
    }
    st = step_dynamics(st, rec.v, sc.dt);
    if (!(st.z > 0.1)) {
      trace.outcome = Outcome::Diverged;
      trace.land_eps = eps;
      trace.final_state = st;
      return trace;
    }
  }
  trace.outcome = Outcome::Timeout;
  trace.land_eps = eps;
  trace.final_state = st;
  return trace;
}

}  // namespace helipad
