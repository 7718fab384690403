#include "helipad/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace helipad {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_real(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [p, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && p == last;
}

bool parse_integer(const std::string& s, long long& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [p, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && p == last;
}

}  // namespace

const std::vector<Knob>& knobs() {
  using K = KnobType;
  static const std::vector<Knob> table = {
      {"thresh.presmooth", K::Real, "1.0", "Gaussian sigma applied before thresholding (px)"},
      {"thresh.block", K::Integer, "31", "adaptive threshold window (odd, px)"},
      {"thresh.c", K::Integer, "15", "adaptive threshold offset (gray levels)"},
      {"thresh.polarity", K::Text, "bright", "foreground polarity: bright | dark"},
      {"hough.r_min", K::Real, "24", "smallest circle radius (px)"},
      {"hough.r_max", K::Real, "180", "largest circle radius (px)"},
      {"hough.vote_frac", K::Real, "0.6", "required boundary support as a fraction of 2*pi*r"},
      {"hough.max_candidates", K::Integer, "10", "circles evaluated per frame"},
      {"extract.size", K::Integer, "228", "side of the resampled region (px)"},
      {"extract.dp_eps", K::Real, "2.0", "polygon simplification tolerance (mask px)"},
      {"extract.blur_sigma", K::Real, "1.5", "smoothing sigma of the redrawn H (mask px)"},
      {"extract.rim_frac", K::Real, "0.96", "kept fraction of the inscribed circle"},
      {"checks.max_center_ratio", K::Real, "0.0825", "diagonal / centroid offset limit (fraction of r)"},
      {"checks.area_min", K::Real, "0.2", "minimum H area over circle area"},
      {"checks.area_max", K::Real, "0.4", "maximum H area over circle area"},
      {"corners.quality", K::Real, "0.05", "corner response floor relative to the strongest"},
      {"corners.min_dist", K::Real, "10", "minimum corner spacing (mask px)"},
      {"corners.refine_half", K::Integer, "4", "half window of gradient corner refinement (0 off)"},
      {"track.grid", K::Integer, "10", "seed grid side K (K*K points)"},
      {"track.levels", K::Integer, "3", "optical-flow pyramid levels"},
      {"track.win", K::Integer, "21", "optical-flow window side (odd, px)"},
      {"track.fb_max", K::Real, "2.0", "median forward-backward error limit (px)"},
      {"track.min_survivors", K::Integer, "10", "minimum points after filtering"},
      {"track.ncc_patch", K::Integer, "7", "NCC patch side (odd, px)"},
      {"track.ncc_min", K::Real, "0.7", "minimum patch NCC"},
      {"track.redetect_every", K::Integer, "0", "force detection every N tracked frames (0 = off)"},
      {"servo.lambda", K::Real, "0.8", "control gain (1/s)"},
      {"servo.mu", K::Real, "1e-6", "damping of the normal equations"},
      {"servo.v_max", K::Real, "0.5", "linear speed cap per axis (m/s)"},
      {"servo.w_max", K::Real, "0.5", "yaw-rate cap (rad/s)"},
      {"servo.land_eps_frac", K::Real, "0.05", "landing threshold as a fraction of the first error norm"},
      {"servo.land_eps_min", K::Real, "0.005", "lower clamp of the landing threshold"},
      {"servo.land_eps_max", K::Real, "0.015", "upper clamp of the landing threshold"},
      {"servo.land_hold", K::Integer, "15", "consecutive frames below threshold to land"},
      {"servo.reference", K::Text, "", "s* file; empty = capture at the reference pose"},
      {"camera.fx", K::Real, "400", "focal length x (px)"},
      {"camera.fy", K::Real, "400", "focal length y (px)"},
      {"camera.cx", K::Real, "319.5", "principal point x (px)"},
      {"camera.cy", K::Real, "183.5", "principal point y (px)"},
      {"camera.width", K::Integer, "640", "image width (px)"},
      {"camera.height", K::Integer, "368", "image height (px)"},
      {"camera.mount", K::Text, "y,x,-z", "body axes of camera x,y,z"},
      {"pad.outer_radius", K::Real, "0.40", "ring outer radius (m)"},
      {"pad.inner_radius", K::Real, "0.36", "ring inner radius (m)"},
      {"pad.bar_width", K::Real, "0.1044", "H bar width (m)"},
      {"pad.bar_height", K::Real, "0.4608", "H bar height (m)"},
      {"pad.h_width", K::Real, "0.3312", "overall H width (m)"},
      {"pad.crossbar", K::Real, "0.0864", "crossbar thickness (m)"},
      {"pad.background", K::Real, "110", "ground level"},
      {"pad.pad", K::Real, "40", "disk level"},
      {"pad.ink", K::Real, "220", "ring and H level"},
      {"pad.texture", K::Real, "20", "surface texture amplitude (levels)"},
      {"pad.x", K::Real, "0", "pad position x at t=0 (m)"},
      {"pad.y", K::Real, "0", "pad position y at t=0 (m)"},
      {"pad.yaw_deg", K::Real, "0", "pad heading (deg)"},
      {"pad.vx", K::Real, "0", "pad drift x (m/s)"},
      {"pad.vy", K::Real, "0", "pad drift y (m/s)"},
      {"sim.x", K::Real, "0.5", "initial x (m)"},
      {"sim.y", K::Real, "-0.3", "initial y (m)"},
      {"sim.z", K::Real, "3.0", "initial altitude (m)"},
      {"sim.yaw_deg", K::Real, "40", "initial yaw (deg)"},
      {"sim.ref_x", K::Real, "0", "reference pose x (m)"},
      {"sim.ref_y", K::Real, "0", "reference pose y (m)"},
      {"sim.ref_z", K::Real, "1.2", "reference pose altitude (m)"},
      {"sim.ref_yaw_deg", K::Real, "0", "reference pose yaw (deg)"},
      {"sim.dt", K::Real, "0.033", "time step (s)"},
      {"sim.max_steps", K::Integer, "1500", "step limit before timeout"},
      {"sim.pixel_noise", K::Real, "0", "Gaussian pixel noise sigma (levels)"},
      {"sim.depth_noise", K::Real, "0", "Gaussian depth noise sigma (m)"},
      {"sim.seed", K::Integer, "1", "noise seed"},
      {"sim.diverge_frames", K::Integer, "30", "frames without features before divergence"},
      {"sim.supersample", K::Integer, "2", "sub-pixel grid side for edge pixels"},
  };
  return table;
}

RunConfig::RunConfig() {
  for (const Knob& k : knobs()) values_[k.key] = k.default_value;
}

const Knob& RunConfig::knob(const std::string& key) const {
  const auto& t = knobs();
  const auto it = std::find_if(t.begin(), t.end(), [&](const Knob& k) { return k.key == key; });
  if (it == t.end()) throw ConfigError("unknown config key '" + key + "'");
  return *it;
}

void RunConfig::set(const std::string& key_in, const std::string& value_in) {
  const std::string key = trim(key_in);
  const std::string value = trim(value_in);
  const Knob& k = knob(key);
  if (k.type == KnobType::Real) {
    double d;
    if (!parse_real(value, d)) throw ConfigError("config key '" + key + "' expects a number, got '" + value + "'");
  } else if (k.type == KnobType::Integer) {
    long long n;
    if (!parse_integer(value, n)) throw ConfigError("config key '" + key + "' expects an integer, got '" + value + "'");
  }
  values_[key] = value;
}

void RunConfig::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void RunConfig::load_text(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    try {
      set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  load_text(ss.str(), path.string());
}

double RunConfig::real(const std::string& key) const {
  if (knob(key).type != KnobType::Real) throw ConfigError("config key '" + key + "' is not a real");
  double d = 0.0;
  parse_real(values_.at(key), d);
  return d;
}

long long RunConfig::integer(const std::string& key) const {
  if (knob(key).type != KnobType::Integer) throw ConfigError("config key '" + key + "' is not an integer");
  long long n = 0;
  parse_integer(values_.at(key), n);
  return n;
}

const std::string& RunConfig::text(const std::string& key) const {
  if (knob(key).type != KnobType::Text) throw ConfigError("config key '" + key + "' is not text");
  return values_.at(key);
}

std::string RunConfig::describe() {
  std::string out = "Config knobs (key = default):\n";
  char buf[256];
  for (const Knob& k : knobs()) {
    const std::string def = k.default_value.empty() ? "\"\"" : k.default_value;
    std::snprintf(buf, sizeof buf, "  %-24s = %-8s  %s\n", k.key.c_str(), def.c_str(), k.help.c_str());
    out += buf;
  }
  return out;
}

DetectConfig detect_config(const RunConfig& c) {
  DetectConfig d;
  d.presmooth_sigma = c.real("thresh.presmooth");
  d.thresh_block = static_cast<int>(c.integer("thresh.block"));
  d.thresh_c = static_cast<int>(c.integer("thresh.c"));
  const std::string& pol = c.text("thresh.polarity");
  if (pol == "bright") {
    d.polarity = Polarity::Bright;
  } else if (pol == "dark") {
    d.polarity = Polarity::Dark;
  } else {
    throw ConfigError("thresh.polarity must be 'bright' or 'dark'");
  }
  d.hough.r_min = c.real("hough.r_min");
  d.hough.r_max = c.real("hough.r_max");
  d.hough.vote_frac = c.real("hough.vote_frac");
  d.hough.max_candidates = static_cast<int>(c.integer("hough.max_candidates"));
  d.extract.size = static_cast<int>(c.integer("extract.size"));
  d.extract.dp_eps = c.real("extract.dp_eps");
  d.extract.blur_sigma = c.real("extract.blur_sigma");
  d.extract.rim_frac = c.real("extract.rim_frac");
  d.checks.max_center_ratio = c.real("checks.max_center_ratio");
  d.checks.area_min = c.real("checks.area_min");
  d.checks.area_max = c.real("checks.area_max");
  d.corners.quality = c.real("corners.quality");
  d.corners.min_dist = c.real("corners.min_dist");
  d.corners.refine_half = static_cast<int>(c.integer("corners.refine_half"));
  return d;
}

TrackParams track_params(const RunConfig& c) {
  TrackParams t;
  t.grid = static_cast<int>(c.integer("track.grid"));
  t.levels = static_cast<int>(c.integer("track.levels"));
  t.win = static_cast<int>(c.integer("track.win"));
  t.fb_max = c.real("track.fb_max");
  t.min_survivors = static_cast<int>(c.integer("track.min_survivors"));
  t.ncc_patch = static_cast<int>(c.integer("track.ncc_patch"));
  t.ncc_min = c.real("track.ncc_min");
  t.redetect_every = static_cast<int>(c.integer("track.redetect_every"));
  return t;
}

SupervisorConfig supervisor_config(const RunConfig& c) { return {detect_config(c), track_params(c)}; }

ServoConfig servo_config(const RunConfig& c) {
  ServoConfig s;
  s.lambda = c.real("servo.lambda");
  s.mu = c.real("servo.mu");
  s.v_max = c.real("servo.v_max");
  s.w_max = c.real("servo.w_max");
  s.land_eps_frac = c.real("servo.land_eps_frac");
  s.land_eps_min = c.real("servo.land_eps_min");
  s.land_eps_max = c.real("servo.land_eps_max");
  s.land_hold = static_cast<int>(c.integer("servo.land_hold"));
  return s;
}

PinholeCamera camera(const RunConfig& c) {
  PinholeCamera cam;
  cam.k = {c.real("camera.fx"), c.real("camera.fy"), c.real("camera.cx"), c.real("camera.cy")};
  cam.width = static_cast<int>(c.integer("camera.width"));
  cam.height = static_cast<int>(c.integer("camera.height"));
  try {
    cam.mount = Mounting::parse(c.text("camera.mount"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("camera.mount: ") + e.what());
  }
  return cam;
}

HelipadSpec helipad_spec(const RunConfig& c) {
  HelipadSpec p;
  p.outer_radius = c.real("pad.outer_radius");
  p.inner_radius = c.real("pad.inner_radius");
  p.bar_width = c.real("pad.bar_width");
  p.bar_height = c.real("pad.bar_height");
  p.h_width = c.real("pad.h_width");
  p.crossbar = c.real("pad.crossbar");
  p.background = c.real("pad.background");
  p.pad = c.real("pad.pad");
  p.ink = c.real("pad.ink");
  p.texture = c.real("pad.texture");
  return p;
}

PadPose pad_pose(const RunConfig& c) {
  return {c.real("pad.x"), c.real("pad.y"), c.real("pad.yaw_deg") * kDeg, c.real("pad.vx"), c.real("pad.vy")};
}

SimConfig sim_config(const RunConfig& c) {
  SimConfig s;
  s.dt = c.real("sim.dt");
  s.max_steps = static_cast<int>(c.integer("sim.max_steps"));
  s.pixel_noise = c.real("sim.pixel_noise");
  s.depth_noise = c.real("sim.depth_noise");
  s.seed = static_cast<std::uint64_t>(c.integer("sim.seed"));
  s.diverge_frames = static_cast<int>(c.integer("sim.diverge_frames"));
  s.supersample = static_cast<int>(c.integer("sim.supersample"));
  s.reference = {c.real("sim.ref_x"), c.real("sim.ref_y"), c.real("sim.ref_z"), c.real("sim.ref_yaw_deg") * kDeg};
  s.pad_pose = pad_pose(c);
  return s;
}

QuadState initial_state(const RunConfig& c) {
  return {c.real("sim.x"), c.real("sim.y"), c.real("sim.z"), c.real("sim.yaw_deg") * kDeg};
}

LoopConfig loop_config(const RunConfig& c) {
  LoopConfig l;
  l.supervisor = supervisor_config(c);
  l.servo = servo_config(c);
  l.sim = sim_config(c);
  const std::string& ref = c.text("servo.reference");
  if (!ref.empty()) l.s_star = read_reference(ref);
  return l;
}

}  // namespace helipad
