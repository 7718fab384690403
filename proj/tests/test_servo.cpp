#include "doctest.h"

#include <filesystem>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "helipad/servo.hpp"

using namespace helipad;

namespace {

FeatureVector random_features(std::mt19937_64& rng, double spread = 0.3) {
  std::uniform_real_distribution<double> d(-spread, spread);
  FeatureVector s;
  for (int i = 0; i < kFeatureDim; ++i) s[i] = d(rng);
  return s;
}

// Symmetric star of 12 points on two radii.
FeatureVector star() {
  FeatureVector s;
  for (int i = 0; i < kFeaturePoints; ++i) {
    const double a = 2 * std::numbers::pi * i / kFeaturePoints;
    const double r = i % 2 ? 0.2 : 0.35;
    s[2 * i] = r * std::cos(a);
    s[2 * i + 1] = r * std::sin(a);
  }
  return s;
}

}  // namespace

TEST_SUITE("servo") {
  TEST_CASE("normalisation") {
    const CameraIntrinsics k{400, 400, 320, 180};
    std::array<PointPx, 12> pts{};
    pts.fill({320, 180});
    pts[1] = {720, 180};
    pts[2] = {420, 180};
    const FeatureVector s = normalize_points(pts, k);
    CHECK(s[0] == 0.0);
    CHECK(s[1] == 0.0);
    CHECK(s[2] == doctest::Approx(1.0));
    CHECK(s[4] == doctest::Approx(0.25));
    CHECK_THROWS_AS(normalize_points(std::span<const PointPx>(pts.data(), 3), k), InvalidArgument);
    CHECK_THROWS_AS(normalize_points(pts, CameraIntrinsics{0, 400, 0, 0}), InvalidArgument);
  }

  TEST_CASE("interaction block values") {
    const auto o = interaction_row(0.0, 0.0, 1.0);
    CHECK(o.row(0).isApprox(Eigen::RowVector4d(-1, 0, 0, 0)));
    CHECK(o.row(1).isApprox(Eigen::RowVector4d(0, -1, 0, 0)));

    const auto b = interaction_row(0.2, -0.1, 2.0);
    CHECK((b.row(0) - Eigen::RowVector4d(-0.5, 0, 0.1, -0.1)).norm() < 1e-15);
    CHECK((b.row(1) - Eigen::RowVector4d(0, -0.5, -0.05, -0.2)).norm() < 1e-15);

    const auto b2 = interaction_row(0.2, -0.1, 4.0);
    CHECK((b2.leftCols<3>() - 0.5 * b.leftCols<3>()).norm() < 1e-15);
    CHECK(b2.col(3) == b.col(3));
    CHECK_THROWS_AS(interaction_row(0.0, 0.0, 0.0), InvalidArgument);
    CHECK_THROWS_AS(interaction_row(0.0, 0.0, -1.0), InvalidArgument);
  }

  TEST_CASE("stacked matrix matches per-point blocks") {
    std::mt19937_64 rng(3);
    const FeatureVector s = random_features(rng);
    const InteractionMatrix L = stack_interaction(s, 2.0);
    CHECK(L.rows() == 24);
    CHECK(L.cols() == 4);
    for (int i = 0; i < kFeaturePoints; ++i) {
      CHECK(L.middleRows<2>(2 * i) == interaction_row(s[2 * i], s[2 * i + 1], 2.0));
    }
    const InteractionMatrix z = stack_interaction(FeatureVector::Zero().eval(), 1.5);
    CHECK(z.col(2).isZero());
    CHECK(z.col(3).isZero());
  }

  TEST_CASE("error vector and norm") {
    std::mt19937_64 rng(4);
    const FeatureVector a = random_features(rng), b = random_features(rng);
    CHECK(compute_error(a, a).norm == 0.0);
    FeatureVector d = FeatureVector::Zero();
    d[0] = 0.3;
    d[1] = 0.4;
    CHECK(compute_error(a + d, a).norm == doctest::Approx(0.5));
    double sq = 0;
    for (int i = 0; i < kFeatureDim; ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
    const auto err = compute_error(a, b);
    CHECK(err.norm == doctest::Approx(std::sqrt(sq)).epsilon(1e-14));
    CHECK(err.e == a - b);
  }

  TEST_CASE("control law basics") {
    std::mt19937_64 rng(5);
    const FeatureVector s = random_features(rng);
    const InteractionMatrix L = stack_interaction(s, 2.0);
    ServoConfig cfg;
    CHECK(control_law(L, FeatureVector::Zero(), cfg) == ControlVelocity{});
    const FeatureVector e = 0.01 * random_features(rng);
    const Eigen::Vector4d v1 = control_law(L, e, cfg).vec();
    const Eigen::Vector4d v2 = control_law(L, 2 * e, cfg).vec();
    CHECK((v2 - 2 * v1).norm() <= 1e-14 * v1.norm() + 1e-16);
  }

  TEST_CASE("control law equals a dense least-squares solve") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 50; ++trial) {
      const FeatureVector s = random_features(rng);
      const FeatureVector e = 0.1 * random_features(rng);
      const double z = 0.5 + trial * 0.07;
      const InteractionMatrix L = stack_interaction(s, z);
      for (double mu : {0.0, 1e-6, 1e-2}) {
        const Eigen::Vector4d v = control_law_raw(L, e, 0.8, mu);
        CHECK((v - fixtures::dense_oracle(L, e, 0.8, mu)).norm() <= 1e-9);
      }
      // With mu = 0 the residual is orthogonal to the columns of L.
      const Eigen::Vector4d v0 = control_law_raw(L, e, 0.8, 0.0);
      CHECK((L.transpose() * (L * v0 + 0.8 * e)).norm() <= 1e-9);
    }
  }

  TEST_CASE("pure x offset on a symmetric star commands +vx") {
    const FeatureVector s_star = star();
    FeatureVector s = s_star;
    for (int i = 0; i < kFeaturePoints; ++i) s[2 * i] += 0.1;
    const double z = 2.0;
    const InteractionMatrix L = stack_interaction(s, z);
    const FeatureVector e = compute_error(s, s_star).e;
    const Eigen::Vector4d v = control_law_raw(L, e, 0.8, 0.0);
    CHECK((v - fixtures::dense_oracle(L, e, 0.8, 0.0)).norm() <= 1e-12);
    // Translating the camera along +x moves the image left; an image offset of +0.1 needs vx > 0.
    CHECK(v[0] > 0.0);
  }

  TEST_CASE("singular configuration is reported") {
    const InteractionMatrix L = stack_interaction(FeatureVector::Zero().eval(), 2.0);
    ServoConfig cfg;
    cfg.mu = 0.0;
    CHECK_THROWS_AS(control_law(L, FeatureVector::Ones().eval(), cfg), DegenerateConfiguration);
  }

  TEST_CASE("cap keeps the linear direction") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> d(-3, 3);
    for (int i = 0; i < 100; ++i) {
      const ControlVelocity v{d(rng), d(rng), d(rng), d(rng)};
      const ControlVelocity c = cap_velocity(v, 0.5, 0.5);
      CHECK(std::max({std::abs(c.vx), std::abs(c.vy), std::abs(c.vz)}) <= 0.5 + 1e-15);
      CHECK(std::abs(c.wz) <= 0.5);
      const double cosine = v.linear().dot(c.linear()) / (v.linear().norm() * c.linear().norm());
      CHECK(std::abs(cosine - 1.0) <= 1e-12);
    }
    const ControlVelocity small{0.1, -0.2, 0.05, 0.3};
    CHECK(cap_velocity(small, 0.5, 0.5) == small);
    CHECK(cap_velocity({0, 0, 0, -2}, 0.5, 0.5).wz == -0.5);
  }

  TEST_CASE("mounting") {
    const ControlVelocity v{0.1, 0.2, 0.3, 0.4};
    CHECK(to_body_frame(v, Mounting{}) == v);
    const Mounting down = Mounting::camera_down();
    const ControlVelocity b = to_body_frame({0, 0, -0.5, 0}, down);
    CHECK(b == ControlVelocity{0, 0, 0.5, 0});
    const ControlVelocity xy = to_body_frame(v, down);
    CHECK(xy == ControlVelocity{0.2, 0.1, -0.3, -0.4});
    CHECK(to_body_frame(to_body_frame(v, down), down) == v);
    CHECK(down.to_string() == "y,x,-z");
    CHECK(Mounting::parse(down.to_string()).matrix() == down.matrix());
    CHECK_THROWS_AS(Mounting::parse("x,x,z"), InvalidArgument);
    CHECK_THROWS_AS(Mounting::parse("x,z,y"), InvalidArgument);
  }

  TEST_CASE("landing monitor") {
    const std::vector<double> a{0.9, 0.5, 0.1};
    CHECK_FALSE(landing_monitor(a, 0.2, 3));
    const std::vector<double> b{0.9, 0.05, 0.04, 0.05};
    CHECK(landing_monitor(b, 0.2, 3));
    CHECK_FALSE(landing_monitor({}, 0.2, 3));
    const std::vector<double> c{0.05, 0.05};
    CHECK_FALSE(landing_monitor(c, 0.2, 3));
  }

  TEST_CASE("landing threshold is clamped") {
    ServoConfig cfg;
    CHECK(landing_threshold(0.2, cfg) == doctest::Approx(0.01));
    CHECK(landing_threshold(0.01, cfg) == doctest::Approx(cfg.land_eps_min));
    CHECK(landing_threshold(5.0, cfg) == doctest::Approx(cfg.land_eps_max));
  }

  TEST_CASE("control law is equivariant under group relabelling") {
    std::mt19937_64 rng(8);
    ServoConfig cfg;
    for (int trial = 0; trial < 10; ++trial) {
      const FeatureVector s = random_features(rng);
      const FeatureVector s_star = s + 0.05 * random_features(rng);
      const ControlVelocity v = control_law(stack_interaction(s, 1.7), compute_error(s, s_star).e, cfg);
      for (int g = 0; g < 3; ++g) {
        for (int shift = 1; shift < 4; ++shift) {
          const FeatureVector sp = shift_group(s, g, shift), tp = shift_group(s_star, g, shift);
          const auto err = compute_error(sp, tp);
          CHECK(err.norm == doctest::Approx(compute_error(s, s_star).norm));
          const ControlVelocity w = control_law(stack_interaction(sp, 1.7), err.e, cfg);
          CHECK((w.vec() - v.vec()).norm() <= 1e-12);
        }
      }
    }
  }

  TEST_CASE("associator resolves the half-turn ambiguity") {
    const auto pts = fixtures::h_corners(228, fixtures::reference_h(), 0.4);
    const FeatureVector s_star = normalize_points(pts, CameraIntrinsics{400, 400, 113.5, 113.5});
    FeatureAssociator assoc(s_star);
    FeatureVector seen = s_star;
    for (int g = 0; g < 3; ++g) seen = shift_group(seen, g, 2);
    const FeatureVector fixed = assoc.associate(seen);
    CHECK((fixed - s_star).norm() < 1e-12);
    CHECK(assoc.initialized());
    CHECK(assoc.shifts() == std::array<int, 3>{2, 2, 2});
  }

  TEST_CASE("reference file round trip") {
    std::mt19937_64 rng(10);
    const FeatureVector s = random_features(rng);
    const auto p = std::filesystem::temp_directory_path() / "helipad_sstar.txt";
    write_reference(p, s);
    CHECK((read_reference(p) - s).norm() < 1e-8);
  }

  TEST_CASE("config validation") {
    ServoConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.lambda = 0.0;
    CHECK_NOTHROW(cfg.validate());
    cfg.lambda = -1.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.v_max = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  }
}
