// helipad: detection, tracking, reference capture and closed-loop simulation from the shell.
//
// Exit codes: 0 success / landed, 1 bad input, 2 no detection, 3 timeout, 4 diverged.

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include "helipad/config.hpp"
#include "helipad/detect.hpp"
#include "helipad/io.hpp"
#include "helipad/plot.hpp"
#include "helipad/servo.hpp"
#include "helipad/sim.hpp"
#include "helipad/track.hpp"

namespace fs = std::filesystem;
using namespace helipad;

namespace {

struct CommonOptions {
  std::string config;
  std::vector<std::string> sets;
  long long seed = -1;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o, const std::string& out_help) {
  cmd->add_option("--config", o.config, "flat key = value config file");
  cmd->add_option("--set", o.sets, "override a knob, key=value (repeatable)");
  cmd->add_option("--seed", o.seed, "noise seed (sets sim.seed)");
  cmd->add_option("--out", o.out, out_help);
  cmd->footer(RunConfig::describe());
}

RunConfig build_config(const CommonOptions& o, const std::string& scenario = {}) {
  RunConfig c;
  if (!o.config.empty()) c.load_file(o.config);
  if (!scenario.empty()) c.load_file(scenario);
  for (const std::string& s : o.sets) c.set_assignment(s);
  if (o.seed >= 0) c.set("sim.seed", std::to_string(o.seed));
  return c;
}

// 3x5 digit glyphs, one row per 3-bit nibble, MSB = left column.
constexpr std::array<std::array<std::uint8_t, 5>, 10> kDigits = {{
    {7, 5, 5, 5, 7}, {2, 6, 2, 2, 7}, {7, 1, 7, 4, 7}, {7, 1, 7, 1, 7}, {5, 5, 7, 1, 1},
    {7, 4, 7, 1, 7}, {7, 4, 7, 5, 7}, {7, 1, 1, 1, 1}, {7, 5, 7, 5, 7}, {7, 5, 7, 1, 7},
}};

void put(RgbImage& img, int x, int y, std::array<std::uint8_t, 3> c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  std::uint8_t* p = img.px(x, y);
  p[0] = c[0];
  p[1] = c[1];
  p[2] = c[2];
}

void draw_text(RgbImage& img, int x, int y, const std::string& s, std::array<std::uint8_t, 3> c, int scale = 2) {
  for (char ch : s) {
    if (ch < '0' || ch > '9') continue;
    const auto& g = kDigits[ch - '0'];
    for (int row = 0; row < 5; ++row) {
      for (int col = 0; col < 3; ++col) {
        if (!(g[row] >> (2 - col) & 1)) continue;
        for (int dy = 0; dy < scale; ++dy) {
          for (int dx = 0; dx < scale; ++dx) put(img, x + col * scale + dx, y + row * scale + dy, c);
        }
      }
    }
    x += 4 * scale;
  }
}

RgbImage annotate(const GrayImage& gray, const HelipadDetection& det, int size) {
  RgbImage img(gray.width(), gray.height());
  for (int y = 0; y < gray.height(); ++y) {
    for (int x = 0; x < gray.width(); ++x) {
      const std::uint8_t v = gray(x, y);
      put(img, x, y, {v, v, v});
    }
  }
  const CircleCandidate& c = det.circle;
  const int steps = std::max(64, static_cast<int>(2 * std::numbers::pi * c.r * 2));
  for (int k = 0; k < steps; ++k) {
    const double a = 2 * std::numbers::pi * k / steps;
    put(img, static_cast<int>(std::lround(c.cx + c.r * std::cos(a))), static_cast<int>(std::lround(c.cy + c.r * std::sin(a))),
        {255, 40, 40});
  }
  const std::array<std::array<std::uint8_t, 3>, 3> colours = {{{40, 220, 40}, {40, 160, 255}, {255, 200, 0}}};
  const CornerSet f = to_frame(det.corners, det.roi, size);
  for (int i = 0; i < 12; ++i) {
    const int x = static_cast<int>(std::lround(f.pts[i].u));
    const int y = static_cast<int>(std::lround(f.pts[i].v));
    const auto col = colours[i / 4];
    for (int d = -3; d <= 3; ++d) {
      put(img, x + d, y, col);
      put(img, x, y + d, col);
    }
    draw_text(img, x + 4, y + 4, std::to_string(i), col);
  }
  return img;
}

int cmd_detect(const std::string& image, const CommonOptions& o) {
  const RunConfig cfg = build_config(o);
  const DetectConfig dc = detect_config(cfg);
  GrayImage gray;
  try {
    gray = read_image(image);
  } catch (const IoError& e) {
    std::cerr << "detect: " << e.what() << '\n';
    return 1;
  }
  const DetectResult r = detect_helipad(gray, dc);
  const std::string prefix = o.out.empty() ? fs::path(image).replace_extension().string() : o.out;
  const CheckReport report = r ? r.detection->report : r.last_report.value_or(CheckReport{});
  {
    std::ofstream f(prefix + ".report.txt");
    if (!f) throw IoError("cannot write " + prefix + ".report.txt");
    f << "detected " << (r ? "yes" : "no") << '\n';
    f << "failure " << to_string(r.failure) << '\n';
    f << "candidates " << r.candidates << '\n';
    f << report.to_text();
  }
  if (!r) {
    std::cout << "no helipad (" << to_string(r.failure) << ")\n";
    return 2;
  }
  const HelipadDetection& d = *r.detection;
  write_corners(prefix + ".corners.txt", to_frame(d.corners, d.roi, dc.extract.size));
  write_ppm(prefix + ".annotated.ppm", annotate(gray, d, dc.extract.size));
  std::printf("helipad at (%.2f, %.2f) r=%.2f\n", d.circle.cx, d.circle.cy, d.circle.r);
  return 0;
}

std::vector<fs::path> numbered_frames(const fs::path& dir) {
  std::vector<std::pair<long long, fs::path>> frames;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".pgm") continue;
    const std::string stem = e.path().stem().string();
    std::string digits;
    for (char ch : stem) {
      if (std::isdigit(static_cast<unsigned char>(ch))) digits += ch;
    }
    if (digits.empty()) continue;
    frames.emplace_back(std::stoll(digits), e.path());
  }
  std::sort(frames.begin(), frames.end());
  std::vector<fs::path> out;
  for (auto& f : frames) out.push_back(f.second);
  return out;
}

int cmd_track(const std::string& dir, const CommonOptions& o) {
  const RunConfig cfg = build_config(o);
  const SupervisorConfig sc = supervisor_config(cfg);
  if (!fs::is_directory(dir)) {
    std::cerr << "track: not a directory: " << dir << '\n';
    return 1;
  }
  const std::vector<fs::path> frames = numbered_frames(dir);
  if (frames.size() < 2) {
    std::cerr << "track: need at least 2 numbered .pgm frames in " << dir << '\n';
    return 1;
  }
  const std::string out_path = o.out.empty() ? "track.csv" : o.out;
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw IoError("cannot write " + out_path);
  out << "frame,mode,bbox,area_ratio\n";
  SupervisorState sup;
  char buf[160];
  for (std::size_t i = 0; i < frames.size(); ++i) {
    GrayImage frame;
    try {
      frame = read_image(frames[i]);
    } catch (const IoError& e) {
      std::cerr << "track: " << e.what() << '\n';
      return 1;
    }
    const SupervisorOutput so = supervisor_step(sup, frame, sc);
    std::string bbox, area;
    if (so.corners && so.bbox) {
      std::snprintf(buf, sizeof buf, "%.2f %.2f %.2f %.2f", so.bbox->u0, so.bbox->v0, so.bbox->w, so.bbox->h);
      bbox = buf;
    }
    if (so.corners && so.area_ratio) {
      std::snprintf(buf, sizeof buf, "%.4f", *so.area_ratio);
      area = buf;
    }
    out << i << ',' << to_string(so.corners ? so.mode : Mode::Detecting) << ',' << bbox << ',' << area << '\n';
  }
  return 0;
}

int cmd_capture_reference(const std::string& image, const CommonOptions& o) {
  const RunConfig cfg = build_config(o);
  const DetectConfig dc = detect_config(cfg);
  const PinholeCamera cam = camera(cfg);
  GrayImage gray;
  try {
    gray = read_image(image);
  } catch (const IoError& e) {
    std::cerr << "capture-reference: " << e.what() << '\n';
    return 1;
  }
  const DetectResult r = detect_helipad(gray, dc);
  if (!r) {
    std::cerr << "capture-reference: no helipad (" << to_string(r.failure) << ")\n";
    return 2;
  }
  const FeatureVector s = normalize_points(to_frame(r.detection->corners, r.detection->roi, dc.extract.size), cam.k);
  write_reference(o.out.empty() ? "s_star.txt" : o.out, s);
  return 0;
}

int cmd_sim(const std::string& scenario, const CommonOptions& o) {
  RunConfig cfg;
  LoopConfig lc;
  PinholeCamera cam;
  HelipadSpec pad;
  QuadState init;
  try {
    cfg = build_config(o, scenario);
    lc = loop_config(cfg);
    cam = camera(cfg);
    pad = helipad_spec(cfg);
    init = initial_state(cfg);
    pad.validate();
    cam.validate();
    lc.servo.validate();
  } catch (const std::exception& e) {
    std::cerr << "sim: malformed scenario: " << e.what() << '\n';
    return 1;
  }
  SimTrace trace;
  try {
    trace = run_closed_loop(init, pad, cam, lc);
  } catch (const SetupError& e) {
    std::cerr << "sim: setup error: " << e.what() << '\n';
    return 1;
  } catch (const InvalidArgument& e) {
    std::cerr << "sim: " << e.what() << '\n';
    return 1;
  }
  const std::string prefix = o.out.empty() ? "sim" : o.out;
  trace.write_csv(prefix + ".csv");
  LineSeries series;
  for (const SimRecord& r : trace.records) {
    series.x.push_back(r.t);
    series.y.push_back(r.err);
  }
  write_svg(prefix + ".svg", svg_line_plot(series, "Error norm over time", "time (s)", "||s - s*||"));
  const QuadState& f = trace.final_state;
  std::printf("%s after %zu steps: x=%.4f y=%.4f z=%.4f yaw=%.2f deg\n", to_string(trace.outcome).c_str(),
              trace.records.size(), f.x, f.y, f.z, f.yaw * 180.0 / std::numbers::pi);
  switch (trace.outcome) {
    case Outcome::Landed: return 0;
    case Outcome::Timeout: return 3;
    case Outcome::Diverged: return 4;
  }
  return 1;
}

int cmd_render(const CommonOptions& o) {
  const RunConfig cfg = build_config(o);
  const SimConfig sc = sim_config(cfg);
  const GrayImage img = render_view(initial_state(cfg), camera(cfg), helipad_spec(cfg), pad_pose(cfg),
                                    {sc.supersample, sc.pixel_noise, sc.seed});
  write_pgm(o.out.empty() ? "view.pgm" : o.out, img);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Helipad detection, tracking and visual-servoing landing simulator"};
  app.require_subcommand(1);
  app.footer(RunConfig::describe());

  CommonOptions o;
  std::string input;

  auto* detect = app.add_subcommand("detect", "detect a helipad in a PGM/PPM image");
  detect->add_option("image", input, "input image")->required();
  add_common(detect, o, "output prefix (default: image path without extension)");

  auto* track = app.add_subcommand("track", "run the detect/track supervisor over numbered PGM frames");
  track->add_option("frames", input, "directory of numbered .pgm frames")->required();
  add_common(track, o, "output CSV (default: track.csv)");

  auto* capture = app.add_subcommand("capture-reference", "write the reference feature file from an image");
  capture->add_option("image", input, "reference image")->required();
  add_common(capture, o, "output s* file (default: s_star.txt)");

  auto* sim = app.add_subcommand("sim", "closed-loop landing simulation");
  sim->add_option("scenario", input, "scenario file (key = value); defaults apply when omitted");
  add_common(sim, o, "output prefix for .csv and .svg (default: sim)");

  auto* render = app.add_subcommand("render", "render the camera view at the sim.* pose");
  add_common(render, o, "output PGM (default: view.pgm)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*detect) return cmd_detect(input, o);
    if (*track) return cmd_track(input, o);
    if (*capture) return cmd_capture_reference(input, o);
    if (*sim) return cmd_sim(input, o);
    if (*render) return cmd_render(o);
  } catch (const ConfigError& e) {
    std::cerr << "config: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
