#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "helipad/config.hpp"
#include "helipad/plot.hpp"

using namespace helipad;

TEST_SUITE("config") {
  TEST_CASE("defaults build the library defaults") {
    const RunConfig c;
    const DetectConfig d = detect_config(c);
    const DetectConfig ref;
    CHECK(d.thresh_block == ref.thresh_block);
    CHECK(d.hough.vote_frac == ref.hough.vote_frac);
    CHECK(d.extract.size == ref.extract.size);
    CHECK(d.checks.max_center_ratio == ref.checks.max_center_ratio);
    const ServoConfig s = servo_config(c);
    CHECK(s.lambda == ServoConfig{}.lambda);
    CHECK(s.mu == ServoConfig{}.mu);
    CHECK(s.land_hold == ServoConfig{}.land_hold);
    const PinholeCamera cam = camera(c);
    CHECK(cam.k.cx == PinholeCamera{}.k.cx);
    CHECK(cam.mount.matrix() == Mounting::camera_down().matrix());
    const SimConfig sc = sim_config(c);
    CHECK(sc.dt == SimConfig{}.dt);
    CHECK(sc.reference == SimConfig{}.reference);
    const QuadState init = initial_state(c);
    CHECK(init.z == 3.0);
    CHECK(init.yaw == doctest::Approx(40.0 * 3.141592653589793 / 180.0));
    CHECK(helipad_spec(c).inner_radius == HelipadSpec{}.inner_radius);
    CHECK(track_params(c).grid == TrackParams{}.grid);
  }

  TEST_CASE("overrides and validation") {
    RunConfig c;
    c.set("servo.lambda", "1.5");
    c.set_assignment("track.grid=8");
    CHECK(servo_config(c).lambda == 1.5);
    CHECK(track_params(c).grid == 8);
    CHECK_THROWS_AS(c.set("servo.gain", "1"), ConfigError);
    CHECK_THROWS_AS(c.set("servo.lambda", "fast"), ConfigError);
    CHECK_THROWS_AS(c.set("track.grid", "2.5"), ConfigError);
    CHECK_THROWS_AS(c.set_assignment("servo.lambda"), ConfigError);
    c.set("thresh.polarity", "sideways");
    CHECK_THROWS_AS(detect_config(c), ConfigError);
  }

  TEST_CASE("text form with comments") {
    RunConfig c;
    c.load_text("# scenario\nsim.x = 0.25   # metres\n\nsim.yaw_deg=10\n");
    CHECK(c.real("sim.x") == 0.25);
    CHECK(initial_state(c).x == 0.25);
    try {
      c.load_text("sim.x = 1\nbogus\n", "scene.cfg");
      FAIL("expected an error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("scene.cfg:2") != std::string::npos);
    }
    CHECK_THROWS_AS(c.load_text("nope.key = 3\n"), ConfigError);
    CHECK_THROWS_AS(c.load_file("/nonexistent/file.cfg"), ConfigError);
  }

  TEST_CASE("help lists every knob with its default") {
    const std::string text = RunConfig::describe();
    for (const auto& k : knobs()) {
      CHECK(text.find(k.key) != std::string::npos);
    }
    CHECK(text.find("0.0825") != std::string::npos);
  }

  TEST_CASE("svg plot") {
    const std::string svg = svg_line_plot({{0, 1, 2, 3}, {1.0, 0.5, NAN, 0.2}}, "error", "t (s)", "norm");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
  }
}
