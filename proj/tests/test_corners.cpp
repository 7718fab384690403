#include "doctest.h"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "helipad/corners.hpp"
#include "helipad/detect.hpp"
#include "helipad/imgproc.hpp"

using namespace helipad;

namespace {

// Each found point matched to a distinct truth point; returns the worst distance.
double match_error(const std::vector<PointPx>& found, std::span<const PointPx> truth) {
  std::vector<bool> used(truth.size(), false);
  double worst = 0.0;
  for (const auto& p : found) {
    double best = 1e300;
    std::size_t bi = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (used[i]) continue;
      const double d = fixtures::dist(p, truth[i]);
      if (d < best) {
        best = d;
        bi = i;
      }
    }
    used[bi] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

PointPx rotate_about(PointPx p, PointPx c, double theta) {
  const double cs = std::cos(theta), sn = std::sin(theta);
  const double du = p.u - c.u, dv = p.v - c.v;
  return {c.u + cs * du - sn * dv, c.v + sn * du + cs * dv};
}

bool same_set(const Quad& a, const Quad& b) {
  for (const auto& p : a) {
    if (std::none_of(b.begin(), b.end(), [&](PointPx q) { return fixtures::dist(p, q) < 1e-9; })) return false;
  }
  return true;
}

CornerSet template_set(double theta) {
  const BinaryImage m = fixtures::h_mask(228, fixtures::reference_h(), theta);
  return extract_corners(corner_input(m), *centroid(m));
}

std::vector<PointPx> concentric() {
  std::vector<PointPx> pts;
  for (double d : {10.0, 6.0, 2.0}) {
    pts.push_back({d, 0});
    pts.push_back({0, d});
    pts.push_back({-d, 0});
    pts.push_back({0, -d});
  }
  return pts;
}

}  // namespace

TEST_SUITE("corners") {
  TEST_CASE("square corners") {
    GrayImage img(120, 100, 0);
    for (int y = 30; y < 70; ++y)
      for (int x = 40; x < 80; ++x) img(x, y) = 200;
    const auto pts = shi_tomasi(gaussian_blur(img, 1.0), 4, 0.05, 10);
    REQUIRE(pts.size() == 4);
    const std::array<PointPx, 4> truth{{{39.5, 29.5}, {79.5, 29.5}, {79.5, 69.5}, {39.5, 69.5}}};
    CHECK(match_error(pts, truth) <= 1.5);
  }

  TEST_CASE("constant image yields a shortage") {
    try {
      shi_tomasi(GrayImage(64, 64, 77), 4, 0.05, 10);
      FAIL("expected a shortage");
    } catch (const CornerError& e) {
      CHECK(e.kind() == CornerErrorKind::Shortage);
    }
  }

  TEST_CASE("reference template gives the 12 structural corners") {
    const BinaryImage m = fixtures::h_mask(228);
    const auto pts = shi_tomasi(corner_input(m), 12, 0.05, 10);
    REQUIRE(pts.size() == 12);
    const auto truth = fixtures::h_corners(228);
    CHECK(match_error(pts, truth) <= 1.5);
  }

  TEST_CASE("responses are sorted strongest first and spaced") {
    const auto img = corner_input(fixtures::h_mask(228, fixtures::reference_h(), 0.3));
    const auto resp = min_eigen_response(img);
    const auto pts = shi_tomasi(img, 12, 0.05, 10);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) CHECK(fixtures::dist(pts[i], pts[j]) >= 10 - 1.0);
    }
    auto at = [&](PointPx p) { return resp(static_cast<int>(std::lround(p.u)), static_cast<int>(std::lround(p.v))); };
    CHECK(at(pts.front()) >= at(pts.back()));
  }

  TEST_CASE("concentric squares group by area") {
    const auto pts = concentric();
    const CornerGroups g = classify_groups(pts);
    CHECK(convex_hull_area(g.outer) == doctest::Approx(200));
    CHECK(convex_hull_area(g.inner) == doctest::Approx(72));
    CHECK(convex_hull_area(g.center) == doctest::Approx(8));
  }

  TEST_CASE("grouping matches the exhaustive oracle and ignores input order") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> jit(-1.5, 1.5);
    for (int trial = 0; trial < 20; ++trial) {
      auto truth = fixtures::h_corners(228, fixtures::reference_h(), 0.3 * trial);
      std::vector<PointPx> pts(truth.begin(), truth.end());
      for (auto& p : pts) p = p + PointPx{jit(rng), jit(rng)};
      const auto want = fixtures::oracle_partition(pts);
      std::shuffle(pts.begin(), pts.end(), rng);
      const CornerGroups g = classify_groups(pts);
      const auto oracle = fixtures::oracle_partition(pts);
      const Quad* groups[3] = {&g.outer, &g.inner, &g.center};
      for (int k = 0; k < 3; ++k) {
        Quad q{pts[oracle[k][0]], pts[oracle[k][1]], pts[oracle[k][2]], pts[oracle[k][3]]};
        CHECK(same_set(*groups[k], q));
      }
      CHECK(convex_hull_area(g.outer) == doctest::Approx(fixtures::quad_hull_area(g.outer)));
      CHECK(want[0].size() == 4);
    }
  }

  TEST_CASE("rotating the input keeps the partition") {
    const auto base = concentric();
    for (double theta : {0.3, 1.0, 2.5}) {
      std::vector<PointPx> rot;
      for (const auto& p : base) rot.push_back(rotate_about(p, {0, 0}, theta));
      const CornerGroups g = classify_groups(rot);
      CHECK(convex_hull_area(g.outer) == doctest::Approx(200));
      CHECK(convex_hull_area(g.center) == doctest::Approx(8));
    }
  }

  TEST_CASE("reference template outer group is the bar tips") {
    const auto truth = fixtures::h_corners(228);
    const CornerGroups g = classify_groups(truth);
    CHECK(same_set(g.outer, {truth[0], truth[1], truth[2], truth[3]}));
    CHECK(same_set(g.inner, {truth[4], truth[5], truth[6], truth[7]}));
    CHECK(same_set(g.center, {truth[8], truth[9], truth[10], truth[11]}));
    CHECK(convex_hull_area(g.outer) > convex_hull_area(g.inner));
    CHECK(convex_hull_area(g.inner) > convex_hull_area(g.center));
  }

  TEST_CASE("classification needs exactly 12 points") {
    std::vector<PointPx> pts(11, PointPx{1, 2});
    CHECK_THROWS_AS(classify_groups(pts), InvalidArgument);
  }

  TEST_CASE("classification is fast") {
    const auto truth = fixtures::h_corners(228, fixtures::reference_h(), 0.2);
    const auto t0 = std::chrono::steady_clock::now();
    constexpr int kRuns = 200;
    for (int i = 0; i < kRuns; ++i) classify_groups(truth);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() / kRuns;
    CHECK(ms < 1.0);
  }

  TEST_CASE("rectangle ordering") {
    const Quad rect{{{10, 5}, {-10, 5}, {-10, -5}, {10, -5}}};
    const Quad plain = order_group(rect, {0, 0}, false);
    CHECK(plain[0] == PointPx{10, 5});
    CHECK(fixtures::dist(plain[0], plain[1]) == doctest::Approx(10));
    CHECK(plain[1] == PointPx{10, -5});

    const Quad inv = order_group(rect, {0, 0}, true);
    CHECK(inv[0] == PointPx{-10, 5});
    for (int i = 0; i < 4; ++i) CHECK(inv[(i + 1) % 4] == plain[i]);
  }

  TEST_CASE("square ordering is not shifted") {
    const Quad sq{{{5, 5}, {-5, 5}, {-5, -5}, {5, -5}}};
    const Quad out = order_group(sq, {0, 0}, false);
    CHECK(out[0] == PointPx{-5, 5});
    CHECK(out[1] == PointPx{5, 5});
    CHECK(order_group(sq, {0, 0}, true) == out);
  }

  TEST_CASE("ordering ties resolve nearer first") {
    const Quad q{{{4, 0}, {2, 0}, {0, 3}, {-3, -3}}};
    const Quad out = order_group(q, {0, 0}, false);
    auto pos = [&](PointPx p) { return std::find(out.begin(), out.end(), p) - out.begin(); };
    const auto a = pos({2, 0}), b = pos({4, 0});
    CHECK(((a + 1) % 4) == b);
  }

  TEST_CASE("upright labels follow the predicted rule") {
    const CornerSet set = template_set(0.0);
    const auto truth = fixtures::h_corners(228);
    const PointPx centre = mask_center(228);
    for (int g = 0; g < 3; ++g) {
      std::array<PointPx, 4> exact{truth[4 * g], truth[4 * g + 1], truth[4 * g + 2], truth[4 * g + 3]};
      const auto order = fixtures::oracle_order(exact, centre, g == 2);
      for (int k = 0; k < 4; ++k) CHECK(fixtures::dist(set.pts[4 * g + k], exact[order[k]]) <= 1.5);
    }
  }

  TEST_CASE("half turn shifts every group by two") {
    const CornerSet up = template_set(0.0);
    const CornerSet flip = template_set(std::numbers::pi);
    const PointPx c = mask_center(228);
    for (int g = 0; g < 3; ++g) {
      for (int k = 0; k < 4; ++k) {
        const PointPx want = rotate_about(up.pts[4 * g + (k + 2) % 4], c, std::numbers::pi);
        CHECK(fixtures::dist(flip.pts[4 * g + k], want) <= 1.5);
      }
    }
  }

  TEST_CASE("small rotation keeps the labels") {
    const CornerSet up = template_set(0.0);
    const double theta = 10.0 * std::numbers::pi / 180.0;
    const CornerSet rot = template_set(theta);
    const PointPx c = mask_center(228);
    for (int i = 0; i < 12; ++i) CHECK(fixtures::dist(rot.pts[i], rotate_about(up.pts[i], c, theta)) <= 1.5);
  }

  TEST_CASE("golden corner file") {
    const CornerSet set = template_set(0.0);
    const auto golden = read_corners(std::filesystem::path(HELIPAD_TEST_DATA) / "reference_corners.txt");
    for (int i = 0; i < 12; ++i) CHECK(fixtures::dist(set.pts[i], golden[i]) <= 1e-3);

    const auto tmp = std::filesystem::temp_directory_path() / "helipad_corners_roundtrip.txt";
    write_corners(tmp, set);
    const auto back = read_corners(tmp);
    for (int i = 0; i < 12; ++i) CHECK(fixtures::dist(set.pts[i], back[i]) <= 1e-6);
  }
}
