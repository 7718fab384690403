#include "helipad/corners.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "helipad/io.hpp"

namespace helipad {

FloatImage min_eigen_response(const GrayImage& img) {
  const int w = img.width();
  const int h = img.height();
  // Border-replicated copy with a 2-pixel margin: 1 for Sobel, 1 for the 3x3 sum.
  const int pw = w + 4;
  std::vector<float> src(static_cast<std::size_t>(pw) * (h + 4));
  for (int y = 0; y < h + 4; ++y) {
    const std::uint8_t* r = img.row(std::clamp(y - 2, 0, h - 1));
    for (int x = 0; x < pw; ++x) src[static_cast<std::size_t>(y) * pw + x] = r[std::clamp(x - 2, 0, w - 1)];
  }
  // Gradient products for padded positions 1..w+2, which replicate the image border.
  const int gw = w + 2;
  std::vector<float> gxx(static_cast<std::size_t>(gw) * (h + 2)), gyy(gxx.size()), gxy(gxx.size());
  for (int y = 0; y < h + 2; ++y) {
    const std::size_t ys = static_cast<std::size_t>(std::clamp(y - 1, 0, h - 1)) + 2;
    const float* rm = &src[(ys - 1) * pw];
    const float* r0 = &src[ys * pw];
    const float* rp = &src[(ys + 1) * pw];
    for (int x = 0; x < gw; ++x) {
      const int xs = std::clamp(x - 1, 0, w - 1) + 2;
      const float gx = (rm[xs + 1] + 2 * r0[xs + 1] + rp[xs + 1]) - (rm[xs - 1] + 2 * r0[xs - 1] + rp[xs - 1]);
      const float gy = (rp[xs - 1] + 2 * rp[xs] + rp[xs + 1]) - (rm[xs - 1] + 2 * rm[xs] + rm[xs + 1]);
      const std::size_t i = static_cast<std::size_t>(y) * gw + x;
      gxx[i] = gx * gx;
      gyy[i] = gy * gy;
      gxy[i] = gx * gy;
    }
  }
  FloatImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double a = 0, b = 0, c = 0;
      for (int dy = 0; dy <= 2; ++dy) {
        const std::size_t row = static_cast<std::size_t>(y + dy) * gw + x;
        for (int dx = 0; dx <= 2; ++dx) {
          a += gxx[row + dx];
          b += gxy[row + dx];
          c += gyy[row + dx];
        }
      }
      const double half_tr = 0.5 * (a + c);
      const double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
      out(x, y) = static_cast<float>(std::max(0.0, half_tr - disc));
    }
  }
  return out;
}

namespace {

double parabola_offset(double left, double mid, double right) {
  const double denom = left - 2.0 * mid + right;
  if (denom >= 0.0) return 0.0;
  return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

}  // namespace

std::vector<PointPx> shi_tomasi(const GrayImage& img, int n, double quality, double min_dist, int refine_half) {
  if (n < 1) throw InvalidArgument("shi_tomasi: n must be >= 1");
  const FloatImage r = min_eigen_response(img);
  const int w = r.width();
  const int h = r.height();
  const float rmax = *std::max_element(r.pixels().begin(), r.pixels().end());
  if (!(rmax > 0.0f)) throw CornerError(CornerErrorKind::Shortage, "shi_tomasi: no corner response");
  const float floor_v = static_cast<float>(quality * rmax);

  struct Cand {
    float score;
    int x;
    int y;
  };
  std::vector<Cand> cands;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float v = r(x, y);
      if (v < floor_v || v <= 0.0f) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if ((dx || dy) && r.contains(x + dx, y + dy) && r(x + dx, y + dy) > v) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) cands.push_back({v, x, y});
    }
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.score > b.score; });

  std::vector<PointPx> out;
  const double d2 = min_dist * min_dist;
  for (const Cand& c : cands) {
    PointPx p{static_cast<double>(c.x), static_cast<double>(c.y)};
    const bool far = std::all_of(out.begin(), out.end(), [&](PointPx q) {
      return (q.u - p.u) * (q.u - p.u) + (q.v - p.v) * (q.v - p.v) >= d2;
    });
    if (!far) continue;
    p.u += parabola_offset(r.at_clamped(c.x - 1, c.y), c.score, r.at_clamped(c.x + 1, c.y));
    p.v += parabola_offset(r.at_clamped(c.x, c.y - 1), c.score, r.at_clamped(c.x, c.y + 1));
    out.push_back(p);
    if (static_cast<int>(out.size()) == n) {
      if (refine_half > 0)
        for (PointPx& q : out) q = refine_corner(img, q, refine_half);
      return out;
    }
  }
  throw CornerError(CornerErrorKind::Shortage,
                    "shi_tomasi: found " + std::to_string(out.size()) + " corners, need " + std::to_string(n));
}

PointPx refine_corner(const GrayImage& img, PointPx p, int half) {
  const double sigma = 0.5 * half + 0.5;
  PointPx q = p;
  for (int iter = 0; iter < 6; ++iter) {
    const int cx = static_cast<int>(std::lround(q.u));
    const int cy = static_cast<int>(std::lround(q.v));
    double a = 0, b = 0, c = 0, bu = 0, bv = 0;
    for (int dy = -half; dy <= half; ++dy) {
      for (int dx = -half; dx <= half; ++dx) {
        const int x = cx + dx;
        const int y = cy + dy;
        const double gx = 0.5 * (img.at_clamped(x + 1, y) - img.at_clamped(x - 1, y));
        const double gy = 0.5 * (img.at_clamped(x, y + 1) - img.at_clamped(x, y - 1));
        const double wgt = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
        a += wgt * gx * gx;
        b += wgt * gx * gy;
        c += wgt * gy * gy;
        bu += wgt * (gx * gx * x + gx * gy * y);
        bv += wgt * (gx * gy * x + gy * gy * y);
      }
    }
    const double det = a * c - b * b;
    if (!(det > 1e-6 * (a + c) * (a + c))) return p;
    const PointPx next{(c * bu - b * bv) / det, (a * bv - b * bu) / det};
    if (std::abs(next.u - p.u) > half || std::abs(next.v - p.v) > half) return p;
    const double step = std::hypot(next.u - q.u, next.v - q.v);
    q = next;
    if (step < 0.01) break;
  }
  return q;
}

double convex_hull_area(std::span<const PointPx> pts) {
  std::vector<PointPx> p(pts.begin(), pts.end());
  if (p.size() < 3) return 0.0;
  std::sort(p.begin(), p.end(), [](PointPx a, PointPx b) { return a.u < b.u || (a.u == b.u && a.v < b.v); });
  auto cross = [](PointPx o, PointPx a, PointPx b) { return (a.u - o.u) * (b.v - o.v) - (a.v - o.v) * (b.u - o.u); };
  std::vector<PointPx> hull(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p[i]) <= 0) --k;
    hull[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], p[i]) <= 0) --k;
    hull[k++] = p[i];
  }
  hull.resize(k - 1);
  double a = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const PointPx& u = hull[i];
    const PointPx& v = hull[(i + 1) % hull.size()];
    a += u.u * v.v - v.u * u.v;
  }
  return 0.5 * std::abs(a);
}

namespace {

// Best 4-subset (by hull area) of the points flagged in `avail`; returns its bitmask.
unsigned best_quad(std::span<const PointPx> pts, unsigned avail) {
  const int n = static_cast<int>(pts.size());
  double best = -1.0;
  unsigned best_mask = 0;
  std::vector<double> areas;
  for (int a = 0; a < n; ++a) {
    if (!(avail >> a & 1u)) continue;
    for (int b = a + 1; b < n; ++b) {
      if (!(avail >> b & 1u)) continue;
      for (int c = b + 1; c < n; ++c) {
        if (!(avail >> c & 1u)) continue;
        for (int d = c + 1; d < n; ++d) {
          if (!(avail >> d & 1u)) continue;
          const std::array<PointPx, 4> q{pts[a], pts[b], pts[c], pts[d]};
          const double area = convex_hull_area(q);
          areas.push_back(area);
          if (area > best) {
            best = area;
            best_mask = (1u << a) | (1u << b) | (1u << c) | (1u << d);
          }
        }
      }
    }
  }
  if (!(best > 0.0)) throw CornerError(CornerErrorKind::AmbiguousGrouping, "classify_groups: degenerate point set");
  const auto near_best = std::count_if(areas.begin(), areas.end(), [&](double a) { return a >= best * (1.0 - 1e-9); });
  if (near_best > 1) throw CornerError(CornerErrorKind::AmbiguousGrouping, "classify_groups: hull-area tie");
  return best_mask;
}

Quad take(std::span<const PointPx> pts, unsigned mask) {
  Quad q{};
  int k = 0;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    if (mask >> i & 1u) q[k++] = pts[i];
  }
  return q;
}

}  // namespace

CornerGroups classify_groups(std::span<const PointPx> pts) {
  if (pts.size() != 12) throw InvalidArgument("classify_groups: need exactly 12 points");
  const unsigned all = (1u << 12) - 1;
  const unsigned outer = best_quad(pts, all);
  const unsigned inner = best_quad(pts, all & ~outer);
  const unsigned center = all & ~outer & ~inner;
  return {take(pts, outer), take(pts, inner), take(pts, center)};
}

Quad order_group(const Quad& group, PointPx centroid, bool invert) {
  struct Polar {
    PointPx p;
    double angle;
    double radius;
  };
  std::array<Polar, 4> pol{};
  for (int i = 0; i < 4; ++i) {
    const double du = group[i].u - centroid.u;
    const double dv = group[i].v - centroid.v;
    const double radius = std::hypot(du, dv);
    if (radius == 0.0) throw InvalidArgument("order_group: point coincides with centroid");
    pol[i] = {group[i], std::atan2(dv, du), radius};
  }
  std::sort(pol.begin(), pol.end(), [](const Polar& a, const Polar& b) {
    if (std::abs(a.angle - b.angle) > 1e-9) return a.angle > b.angle;
    return a.radius < b.radius;
  });
  for (int i = 0; i + 1 < 4; ++i) {
    if (std::abs(pol[i].angle - pol[i + 1].angle) <= 1e-9 && std::abs(pol[i].radius - pol[i + 1].radius) <= 1e-9) {
      throw CornerError(CornerErrorKind::AmbiguousOrder, "order_group: coincident angle and radius");
    }
  }
  Quad out{pol[0].p, pol[1].p, pol[2].p, pol[3].p};
  const double first = distance(out[0], out[1]);
  const double last = distance(out[0], out[3]);
  const bool shift = invert ? first < last : first > last;
  if (shift) std::rotate(out.begin(), out.begin() + 1, out.end());
  return out;
}

CornerSet label_corners(const CornerGroups& groups, PointPx centroid) {
  CornerSet set{};
  set.centroid = centroid;
  const std::array<Quad, 3> ordered{order_group(groups.outer, centroid, false), order_group(groups.inner, centroid, false),
                                    order_group(groups.center, centroid, true)};
  for (int g = 0; g < 3; ++g) {
    for (int i = 0; i < 4; ++i) set.pts[4 * g + i] = ordered[g][i];
  }
  return set;
}

CornerSet extract_corners(const GrayImage& img, PointPx centroid, const ShiTomasiParams& params) {
  const std::vector<PointPx> pts = shi_tomasi(img, params.count, params.quality, params.min_dist, params.refine_half);
  if (pts.size() != 12) throw InvalidArgument("extract_corners: the H feature set has exactly 12 corners");
  return label_corners(classify_groups(pts), centroid);
}

void write_corners(const std::filesystem::path& path, const CornerSet& set) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[96];
  for (int i = 0; i < 12; ++i) {
    std::snprintf(buf, sizeof buf, "%d %.6f %.6f\n", i, set.pts[i].u, set.pts[i].v);
    out << buf;
  }
}

std::array<PointPx, 12> read_corners(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<PointPx, 12> pts{};
  std::array<bool, 12> seen{};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    int label = -1;
    double u = 0, v = 0;
    if (!(ls >> label >> u >> v) || label < 0 || label > 11 || seen[label]) {
      throw IoError("malformed corner line in " + path.string() + ": " + line);
    }
    pts[label] = {u, v};
    seen[label] = true;
  }
  if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
    throw IoError(path.string() + ": expected 12 labelled corners");
  }
  return pts;
}

}  // namespace helipad
