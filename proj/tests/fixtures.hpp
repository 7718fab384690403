#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "helipad/corners.hpp"
#include "helipad/image.hpp"
#include "helipad/imgproc.hpp"
#include "helipad/servo.hpp"

namespace fixtures {

using helipad::BinaryImage;
using helipad::GrayImage;
using helipad::PointPx;

/// H outline in units of the circle radius: bars along the local vertical axis.
struct HShape {
  double bar = 0.22;
  double height = 1.1;
  double width = 1.0;
  double crossbar = 0.36;

  bool inside(double a, double b) const {
    const double hw = 0.5 * width, hh = 0.5 * height;
    if (std::abs(a) > hw || std::abs(b) > hh) return false;
    return std::abs(a) >= hw - bar || std::abs(b) <= 0.5 * crossbar;
  }
  double area() const { return 2 * bar * height + (width - 2 * bar) * crossbar; }
  HShape scaled(double s) const { return {bar * s, height * s, width * s, crossbar * s}; }

  /// 12 corners in local units: outer 4, inner 4, crossbar 4.
  std::array<PointPx, 12> corners() const {
    const double hw = 0.5 * width, hh = 0.5 * height, iw = hw - bar, ch = 0.5 * crossbar;
    return {{{hw, hh}, {-hw, hh}, {-hw, -hh}, {hw, -hh},
             {iw, hh}, {-iw, hh}, {-iw, -hh}, {iw, -hh},
             {iw, ch}, {-iw, ch}, {-iw, -ch}, {iw, -ch}}};
  }
};

/// The test-suite reference H.
inline HShape reference_h() { return {}; }

/// The simulator's default pad H relative to its inner radius of 0.36 m.
inline HShape pad_h() { return {0.1044 / 0.36, 0.4608 / 0.36, 0.3312 / 0.36, 0.0864 / 0.36}; }

/// Local (a, b) -> image point for an H centred at c with radius r rotated by theta.
inline PointPx place(PointPx local, PointPx c, double r, double theta) {
  const double cs = std::cos(theta), sn = std::sin(theta);
  return {c.u + r * (cs * local.u - sn * local.v), c.v + r * (sn * local.u + cs * local.v)};
}

inline PointPx unplace(double u, double v, PointPx c, double r, double theta) {
  const double cs = std::cos(theta), sn = std::sin(theta);
  const double du = (u - c.u) / r, dv = (v - c.v) / r;
  return {cs * du + sn * dv, -sn * du + cs * dv};
}

/// Pixel-centre rasterisation of the H in a size x size mask (r = size / 2).
inline BinaryImage h_mask(int size, const HShape& shape = reference_h(), double theta = 0.0,
                          PointPx offset = {0, 0}) {
  BinaryImage m(size, size);
  const double r = 0.5 * size;
  const PointPx c{0.5 * size - 0.5 + offset.u, 0.5 * size - 0.5 + offset.v};
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const PointPx p = unplace(x, y, c, r, theta);
      m(x, y) = shape.inside(p.u, p.v) ? 1 : 0;
    }
  }
  return m;
}

inline std::array<PointPx, 12> h_corners(int size, const HShape& shape = reference_h(), double theta = 0.0,
                                         PointPx offset = {0, 0}) {
  const double r = 0.5 * size;
  const PointPx c{0.5 * size - 0.5 + offset.u, 0.5 * size - 0.5 + offset.v};
  std::array<PointPx, 12> out{};
  const auto local = shape.corners();
  for (int i = 0; i < 12; ++i) out[i] = place(local[i], c, r, theta);
  return out;
}

/// Supersampled raster of an arbitrary intensity function.
template <typename F>
GrayImage raster(int w, int h, F&& f, int ss = 4, double noise = 0.0, std::uint64_t seed = 1) {
  GrayImage img(w, h);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      double acc = 0.0;
      for (int j = 0; j < ss; ++j) {
        for (int i = 0; i < ss; ++i) acc += f(u - 0.5 + (i + 0.5) / ss, v - 0.5 + (j + 0.5) / ss);
      }
      double val = acc / (ss * ss);
      if (noise > 0.0) val += noise * gauss(rng);
      img(u, v) = static_cast<std::uint8_t>(std::clamp(std::lround(val), 0L, 255L));
    }
  }
  return img;
}

/// Image-space helipad scene: bright ring, dark disk of radius r, bright H.
struct Scene {
  int width = 640;
  int height = 368;
  PointPx center{319.5, 183.5};
  double r = 90.0;
  double theta = 0.0;
  HShape shape = reference_h();
  bool ring = true;
  bool disk = true;
  bool letter = true;
  double outer = 1.111;  // ring outer radius over r
  double background = 110, pad = 40, ink = 220;
  double brightness = 0.0;
  double noise = 0.0;
  std::uint64_t seed = 1;

  double sample(double u, double v) const {
    const double d = std::hypot(u - center.u, v - center.v) / r;
    double val = background;
    if (ring && d <= outer) val = ink;
    if (disk && d <= 1.0) val = pad;
    if (letter) {
      const PointPx p = unplace(u, v, center, r, theta);
      if (shape.inside(p.u, p.v)) val = ink;
    }
    return val + brightness;
  }

  GrayImage render(int ss = 4) const {
    return raster(width, height, [this](double u, double v) { return sample(u, v); }, ss, noise, seed);
  }
};

/// Hull area of 4 points: the largest simple-ordering shoelace area, or the largest triangle
/// when one point is interior.
inline double quad_hull_area(const std::array<PointPx, 4>& q) {
  auto tri = [](PointPx a, PointPx b, PointPx c) {
    return 0.5 * std::abs((b.u - a.u) * (c.v - a.v) - (c.u - a.u) * (b.v - a.v));
  };
  auto shoelace = [](PointPx a, PointPx b, PointPx c, PointPx d) {
    const PointPx p[4] = {a, b, c, d};
    double s = 0;
    for (int i = 0; i < 4; ++i) s += p[i].u * p[(i + 1) % 4].v - p[(i + 1) % 4].u * p[i].v;
    return 0.5 * std::abs(s);
  };
  const double triangles = std::max({tri(q[0], q[1], q[2]), tri(q[0], q[1], q[3]), tri(q[0], q[2], q[3]),
                                     tri(q[1], q[2], q[3])});
  const double quads = std::max({shoelace(q[0], q[1], q[2], q[3]), shoelace(q[0], q[2], q[1], q[3]),
                                 shoelace(q[0], q[1], q[3], q[2])});
  return std::max(triangles, quads);
}

/// Exhaustive convex-area partition, written independently of the library.
/// Index sets (sorted) of the outer, inner and remaining groups.
inline std::array<std::array<int, 4>, 3> oracle_partition(const std::vector<PointPx>& pts) {
  std::array<std::array<int, 4>, 3> out{};
  std::vector<int> pool(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) pool[i] = static_cast<int>(i);
  for (int g = 0; g < 2; ++g) {
    double best = -1;
    std::array<int, 4> pick{};
    const int n = static_cast<int>(pool.size());
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        for (int c = b + 1; c < n; ++c)
          for (int d = c + 1; d < n; ++d) {
            const double area = quad_hull_area({pts[pool[a]], pts[pool[b]], pts[pool[c]], pts[pool[d]]});
            if (area > best) {
              best = area;
              pick = {pool[a], pool[b], pool[c], pool[d]};
            }
          }
    out[g] = pick;
    std::erase_if(pool, [&](int i) { return std::find(pick.begin(), pick.end(), i) != pick.end(); });
  }
  std::copy(pool.begin(), pool.end(), out[2].begin());
  for (auto& g : out) std::sort(g.begin(), g.end());
  return out;
}

/// Independent statement of the labelling rule for one group: descending atan2 angle about
/// `c`, then a one-step rotation when the first edge is the longer one (shorter if invert).
inline std::array<int, 4> oracle_order(const std::array<PointPx, 4>& g, PointPx c, bool invert) {
  std::array<int, 4> idx{0, 1, 2, 3};
  std::array<double, 4> ang{};
  for (int i = 0; i < 4; ++i) ang[i] = std::atan2(g[i].v - c.v, g[i].u - c.u);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return ang[a] > ang[b]; });
  auto d = [&](int a, int b) { return std::hypot(g[a].u - g[b].u, g[a].v - g[b].v); };
  const double first = d(idx[0], idx[1]), last = d(idx[0], idx[3]);
  if (invert ? first < last : first > last) std::rotate(idx.begin(), idx.begin() + 1, idx.end());
  return idx;
}

/// Mean threshold by direct window summation.
inline BinaryImage naive_threshold(const GrayImage& img, int block, int c, helipad::Polarity pol) {
  BinaryImage out(img.width(), img.height());
  const int half = block / 2;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      long long sum = 0, count = 0;
      for (int j = y - half; j <= y + half; ++j) {
        for (int i = x - half; i <= x + half; ++i) {
          if (!img.contains(i, j)) continue;
          sum += img(i, j);
          ++count;
        }
      }
      const long long p = img(x, y) * count;
      out(x, y) = (pol == helipad::Polarity::Bright ? p > sum + c * count : p < sum - c * count) ? 1 : 0;
    }
  }
  return out;
}

// Argmin |A v - b| with A = [L; sqrt(mu) I], b = [-lambda e; 0] by Householder QR.
inline Eigen::Vector4d dense_oracle(const helipad::InteractionMatrix& L, const helipad::FeatureVector& e, double lambda, double mu) {
  Eigen::Matrix<double, helipad::kFeatureDim + 4, 4> a;
  a.topRows<helipad::kFeatureDim>() = L;
  a.bottomRows<4>() = std::sqrt(mu) * Eigen::Matrix4d::Identity();
  Eigen::Matrix<double, helipad::kFeatureDim + 4, 1> b = Eigen::Matrix<double, helipad::kFeatureDim + 4, 1>::Zero();
  b.head<helipad::kFeatureDim>() = -lambda * e;
  return a.colPivHouseholderQr().solve(b);
}

inline double dist(PointPx a, PointPx b) { return std::hypot(a.u - b.u, a.v - b.v); }

}  // namespace fixtures
