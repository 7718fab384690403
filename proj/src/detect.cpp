#include "helipad/detect.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace helipad {

namespace {

// Moves every edge of a simple polygon outward by d; vertices are the intersections of
// neighbouring shifted edges. Near-parallel neighbours keep the plain normal shift.
Polygon offset_polygon(const Polygon& poly, double d) {
  const std::size_t n = poly.size();
  double area2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) area2 += poly[i].u * poly[(i + 1) % n].v - poly[(i + 1) % n].u * poly[i].v;
  const double sign = area2 > 0 ? 1.0 : -1.0;
  auto normal = [&](std::size_t i) {
    const PointPx a = poly[i], b = poly[(i + 1) % n];
    const double len = distance(a, b);
    if (len < 1e-12) return PointPx{0, 0};
    // Outward for the orientation given by the signed area (y axis points down).
    return PointPx{sign * (b.v - a.v) / len, -sign * (b.u - a.u) / len};
  };
  Polygon out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const PointPx n0 = normal((i + n - 1) % n), n1 = normal(i);
    const double c = 1.0 + n0.u * n1.u + n0.v * n1.v;
    out[i] = c > 0.2 ? poly[i] + (d / c) * (n0 + n1) : poly[i] + d * n1;
  }
  return out;
}

struct Edgel {
  int x;
  int y;
  float gx;  // unit gradient, dark -> bright
  float gy;
};

std::vector<Edgel> boundary_edgels(const BinaryImage& edges, const GrayImage& gray) {
  std::vector<Edgel> out;
  const int w = edges.width();
  const int h = edges.height();
  for (int y = 1; y + 1 < h; ++y) {
    const std::uint8_t* r = edges.row(y);
    for (int x = 1; x + 1 < w; ++x) {
      if (!r[x]) continue;
      if (r[x - 1] && r[x + 1] && edges(x, y - 1) && edges(x, y + 1)) continue;
      auto p = [&](int dx, int dy) { return static_cast<float>(gray(x + dx, y + dy)); };
      const float gx = (p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1));
      const float gy = (p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1));
      const float m = std::hypot(gx, gy);
      if (m < 1e-3f) continue;
      out.push_back({x, y, gx / m, gy / m});
    }
  }
  return out;
}

// Separable (2k+1)^2 box sum.
std::vector<float> box_sum(const std::vector<float>& acc, int w, int h, int k) {
  std::vector<float> tmp(acc.size(), 0.0f);
  std::vector<float> out(acc.size(), 0.0f);
  for (int y = 0; y < h; ++y) {
    const float* a = acc.data() + static_cast<std::size_t>(y) * w;
    float* t = tmp.data() + static_cast<std::size_t>(y) * w;
    float run = 0.0f;
    for (int x = 0; x < std::min(k, w); ++x) run += a[x];
    for (int x = 0; x < w; ++x) {
      if (x + k < w) run += a[x + k];
      if (x - k - 1 >= 0) run -= a[x - k - 1];
      t[x] = run;
    }
  }
  for (int x = 0; x < w; ++x) {
    float run = 0.0f;
    for (int y = 0; y < std::min(k, h); ++y) run += tmp[static_cast<std::size_t>(y) * w + x];
    for (int y = 0; y < h; ++y) {
      if (y + k < h) run += tmp[static_cast<std::size_t>(y + k) * w + x];
      if (y - k - 1 >= 0) run -= tmp[static_cast<std::size_t>(y - k - 1) * w + x];
      out[static_cast<std::size_t>(y) * w + x] = run;
    }
  }
  return out;
}

bool polarity_ok(CirclePolarity pol, double cosang) {
  switch (pol) {
    case CirclePolarity::DarkInside: return cosang > 0.5;
    case CirclePolarity::BrightInside: return cosang < -0.5;
    case CirclePolarity::Any: return std::abs(cosang) > 0.5;
  }
  return false;
}

// Algebraic (Kasa) circle fit; returns false on a degenerate system.
bool fit_circle(const std::vector<std::pair<double, double>>& pts, double& cx, double& cy, double& r) {
  if (pts.size() < 8) return false;
  double mx = 0, my = 0;
  for (auto [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= pts.size();
  my /= pts.size();
  double suu = 0, svv = 0, suv = 0, suuu = 0, svvv = 0, suvv = 0, svuu = 0;
  for (auto [x, y] : pts) {
    const double u = x - mx;
    const double v = y - my;
    suu += u * u;
    svv += v * v;
    suv += u * v;
    suuu += u * u * u;
    svvv += v * v * v;
    suvv += u * v * v;
    svuu += v * u * u;
  }
  const double det = suu * svv - suv * suv;
  if (std::abs(det) < 1e-9) return false;
  const double bu = 0.5 * (suuu + suvv);
  const double bv = 0.5 * (svvv + svuu);
  const double uc = (bu * svv - bv * suv) / det;
  const double vc = (suu * bv - suv * bu) / det;
  cx = uc + mx;
  cy = vc + my;
  r = std::sqrt(uc * uc + vc * vc + (suu + svv) / pts.size());
  return std::isfinite(r);
}

std::vector<CircleCandidate> hough_from_edgels(const std::vector<Edgel>& edgels, int w, int h,
                                               const HoughParams& params) {
  if (!(params.r_min > 0.0) || !(params.r_min < params.r_max)) {
    throw InvalidArgument("hough_circles: need 0 < r_min < r_max");
  }
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const int rmin = static_cast<int>(std::floor(params.r_min));
  const int rmax = static_cast<int>(std::ceil(params.r_max));

  // Centre voting along the gradient line.
  std::vector<float> acc(static_cast<std::size_t>(w) * h, 0.0f);
  for (const Edgel& e : edgels) {
    for (int sgn : {-1, 1}) {
      // DarkInside: centre lies against the gradient.
      if (params.polarity == CirclePolarity::DarkInside && sgn > 0) continue;
      if (params.polarity == CirclePolarity::BrightInside && sgn < 0) continue;
      for (int r = rmin; r <= rmax; ++r) {
        const int cx = static_cast<int>(std::lround(e.x + sgn * r * e.gx));
        const int cy = static_cast<int>(std::lround(e.y + sgn * r * e.gy));
        if (cx < 0 || cy < 0 || cx >= w || cy >= h) break;
        acc[static_cast<std::size_t>(cy) * w + cx] += 1.0f;
      }
    }
  }
  const std::vector<float> smooth = box_sum(acc, w, h, 2);
  const float min_center = static_cast<float>(0.5 * params.vote_frac * kTwoPi * params.r_min);

  struct Peak {
    float score;
    int x;
    int y;
  };
  std::vector<Peak> peaks;
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      const float v = smooth[static_cast<std::size_t>(y) * w + x];
      if (v < min_center) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const float q = smooth[static_cast<std::size_t>(y + dy) * w + x + dx];
          // Strict on one side so plateaus yield one peak.
          if ((dx || dy) && (q > v || (q == v && (dy < 0 || (dy == 0 && dx < 0))))) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) peaks.push_back({v, x, y});
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.score > b.score; });
  std::vector<Peak> centers;
  const double nms2 = 0.25 * params.r_min * params.r_min;
  for (const Peak& p : peaks) {
    const bool keep = std::none_of(centers.begin(), centers.end(), [&](const Peak& q) {
      return double(q.x - p.x) * (q.x - p.x) + double(q.y - p.y) * (q.y - p.y) < nms2;
    });
    if (keep) centers.push_back(p);
    if (static_cast<int>(centers.size()) >= 3 * params.max_candidates) break;
  }

  std::vector<CircleCandidate> out;
  const int nbins = rmax + 3;
  std::vector<int> hist(nbins);
  for (const Peak& c : centers) {
    // Sub-pixel centre from the raw accumulator around the peak.
    double sx = 0, sy = 0, sw = 0;
    for (int dy = -2; dy <= 2; ++dy) {
      for (int dx = -2; dx <= 2; ++dx) {
        const int x = c.x + dx, y = c.y + dy;
        if (x < 0 || y < 0 || x >= w || y >= h) continue;
        const double a = acc[static_cast<std::size_t>(y) * w + x];
        sx += a * x;
        sy += a * y;
        sw += a;
      }
    }
    const double ccx = sw > 0 ? sx / sw : c.x;
    const double ccy = sw > 0 ? sy / sw : c.y;

    std::fill(hist.begin(), hist.end(), 0);
    for (const Edgel& e : edgels) {
      const double du = e.x - ccx;
      const double dv = e.y - ccy;
      const double d = std::hypot(du, dv);
      if (d < params.r_min - 1.5 || d > params.r_max + 1.5 || d == 0.0) continue;
      if (!polarity_ok(params.polarity, (e.gx * du + e.gy * dv) / d)) continue;
      const int bin = static_cast<int>(std::lround(d));
      if (bin >= 0 && bin < nbins) ++hist[bin];
    }
    auto support = [&](int r) {
      int s = 0;
      for (int k = r - 1; k <= r + 1; ++k) {
        if (k >= 0 && k < nbins) s += hist[k];
      }
      return s;
    };
    for (int r = rmin; r <= rmax; ++r) {
      const int s = support(r);
      // Coarse gate; the full vote fraction is applied after refinement.
      if (s < 0.5 * params.vote_frac * kTwoPi * r) continue;
      bool is_max = true;
      for (int k = r - 2; k <= r + 2; ++k) {
        if (k == r || k < rmin || k > rmax) continue;
        const int q = support(k);
        if (q > s || (q == s && k < r)) {
          is_max = false;
          break;
        }
      }
      if (!is_max) continue;

      // Refine centre and radius on the supporting boundary pixels.
      double fx = ccx, fy = ccy, fr = r;
      auto supporters = [&](double band) {
        std::vector<std::pair<double, double>> pts;
        for (const Edgel& e : edgels) {
          const double du = e.x - fx;
          const double dv = e.y - fy;
          const double d = std::hypot(du, dv);
          if (d == 0.0 || std::abs(d - fr) > band) continue;
          if (!polarity_ok(params.polarity, (e.gx * du + e.gy * dv) / d)) continue;
          pts.emplace_back(e.x, e.y);
        }
        return pts;
      };
      for (int iter = 0; iter < 3; ++iter) {
        const auto pts = supporters(iter == 0 ? 3.0 : 1.5);
        double nx, ny, nr;
        if (!fit_circle(pts, nx, ny, nr) || std::hypot(nx - fx, ny - fy) > 4.0 || std::abs(nr - fr) > 4.0) break;
        fx = nx;
        fy = ny;
        fr = nr;
      }
      if (fr < params.r_min || fr > params.r_max) continue;
      const int votes = static_cast<int>(supporters(1.5).size());
      if (votes < params.vote_frac * kTwoPi * fr) continue;
      out.push_back({fx, fy, fr, votes});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const CircleCandidate& a, const CircleCandidate& b) { return a.votes > b.votes; });
  if (static_cast<int>(out.size()) > params.max_candidates) out.resize(params.max_candidates);
  return out;
}

}  // namespace

std::vector<CircleCandidate> hough_circles(const BinaryImage& edges, const GrayImage& gray, const HoughParams& params) {
  if (edges.width() != gray.width() || edges.height() != gray.height()) {
    throw InvalidArgument("hough_circles: edge and gray images differ in size");
  }
  return hough_from_edgels(boundary_edgels(edges, gray), edges.width(), edges.height(), params);
}

std::vector<CircleCandidate> hough_circles(const BinaryImage& edges, double r_min, double r_max, double vote_frac) {
  HoughParams p;
  p.r_min = r_min;
  p.r_max = r_max;
  p.vote_frac = vote_frac;
  p.polarity = CirclePolarity::Any;
  return hough_circles(edges, gaussian_blur(to_gray(edges), 1.0), p);
}

BinaryImage extract_h(const GrayImage& gray, const CircleCandidate& circle, const ExtractParams& params) {
  const int n = params.size;
  const BBox roi = circle.roi();
  if (!roi.intersects(gray.width(), gray.height())) throw ExtractionFailed("extract_h: circle lies outside the image");
  const GrayImage crop = resample_region(gray, roi, n, n);
  BinaryImage bin = threshold(crop, otsu_threshold(crop));

  const PointPx c = mask_center(n);
  const double keep_r = params.rim_frac * mask_radius(n);
  const double rim_r = keep_r - 1.5;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      if (std::hypot(x - c.u, y - c.v) > keep_r) bin(x, y) = 0;
    }
  }
  // Components reaching the rim belong to the ring or the surroundings, not to the H.
  const Components comps = label_components(bin, Connectivity::Eight);
  std::vector<bool> rim(comps.sizes.size(), false);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const int l = comps.labels(x, y);
      if (l && std::hypot(x - c.u, y - c.v) >= rim_r) rim[l - 1] = true;
    }
  }
  int best = 0;
  for (std::size_t k = 0; k < comps.sizes.size(); ++k) {
    if (!rim[k] && (best == 0 || comps.sizes[k] > comps.sizes[best - 1])) best = static_cast<int>(k) + 1;
  }
  if (best == 0) throw ExtractionFailed("extract_h: no foreground inside the circle");
  BinaryImage h_only(n, n, 0);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) h_only(x, y) = comps.labels(x, y) == best ? 1 : 0;
  }

  // Smooth: simplify the outline, redraw it filled, blur and re-binarise.
  const std::vector<Contour> contours = trace_contours(h_only);
  if (contours.empty() || contours.front().size() < 3) throw ExtractionFailed("extract_h: degenerate component");
  // Contour vertices are boundary pixel centres, half a pixel inside the region's edge.
  const Polygon poly = offset_polygon(approx_polygon(to_polygon(contours.front()), params.dp_eps), 0.5);
  const BinaryImage filled = fill_polygon(poly, n, n);
  const BinaryImage smooth = threshold(gaussian_blur(to_gray(filled), params.blur_sigma), 127);
  auto single = largest_component(smooth, Connectivity::Eight);
  if (!single) throw ExtractionFailed("extract_h: smoothing removed the component");
  return *std::move(single);
}

RatioCheck check_diagonals(std::span<const PointPx> outer, PointPx center, double r_mask, double max_ratio) {
  if (outer.size() != 4 || !(r_mask > 0.0)) return {0.0, false};
  if (convex_hull_area(outer) <= 0.0) return {0.0, false};
  PointPx mean{};
  for (const PointPx& p : outer) mean = mean + 0.25 * p;
  const double ratio = distance(mean, center) / r_mask;
  return {ratio, ratio < max_ratio};
}

RatioCheck check_diagonals(const CornerSet& corners, PointPx center, double r_mask, double max_ratio) {
  const Quad outer = corners.group(0);
  return check_diagonals(std::span<const PointPx>(outer), center, r_mask, max_ratio);
}

RatioCheck check_centroid(const BinaryImage& h_mask, PointPx center, double r_mask, double max_ratio) {
  const auto c = centroid(h_mask);
  if (!c || !(r_mask > 0.0)) return {0.0, false};
  const double ratio = distance(*c, center) / r_mask;
  return {ratio, ratio < max_ratio};
}

RatioCheck check_area(const BinaryImage& h_mask, double r_mask, double area_min, double area_max) {
  if (!(r_mask > 0.0)) throw InvalidArgument("check_area: r_mask must be > 0");
  const double ratio = static_cast<double>(count_foreground(h_mask)) / (std::numbers::pi * r_mask * r_mask);
  return {ratio, ratio >= area_min && ratio <= area_max};
}

std::string CheckReport::to_text() const {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(6);
  os << "diag_ratio " << diag_ratio << ' ' << (passed[0] ? "pass" : "fail") << '\n'
     << "centroid_ratio " << centroid_ratio << ' ' << (passed[1] ? "pass" : "fail") << '\n'
     << "area_ratio " << area_ratio << ' ' << (passed[2] ? "pass" : "fail") << '\n';
  return os.str();
}

std::string to_string(DetectFailure f) {
  switch (f) {
    case DetectFailure::None: return "none";
    case DetectFailure::NoCircles: return "no-circles";
    case DetectFailure::ExtractionFailed: return "extraction-failed";
    case DetectFailure::ChecksFailed: return "checks-failed";
  }
  return "unknown";
}

PointPx mask_to_frame(PointPx p, const BBox& roi, int size) {
  return {roi.u0 + (p.u + 0.5) * roi.w / size, roi.v0 + (p.v + 0.5) * roi.h / size};
}

PointPx frame_to_mask(PointPx p, const BBox& roi, int size) {
  return {(p.u - roi.u0) * size / roi.w - 0.5, (p.v - roi.v0) * size / roi.h - 0.5};
}

CornerSet to_frame(const CornerSet& mask_corners, const BBox& roi, int size) {
  CornerSet out = mask_corners;
  for (PointPx& p : out.pts) p = mask_to_frame(p, roi, size);
  out.centroid = mask_to_frame(mask_corners.centroid, roi, size);
  return out;
}

GrayImage corner_input(const BinaryImage& h_mask) { return gaussian_blur(to_gray(h_mask), 1.0); }

CandidateOutcome evaluate_candidate(const GrayImage& gray, const CircleCandidate& circle, const DetectConfig& cfg) {
  CandidateOutcome out;
  const int n = cfg.extract.size;
  const PointPx c = mask_center(n);
  const double r = mask_radius(n);
  try {
    out.h_mask = extract_h(gray, circle, cfg.extract);
  } catch (const ExtractionFailed&) {
    return out;
  }
  const auto a = check_area(*out.h_mask, r, cfg.checks.area_min, cfg.checks.area_max);
  const auto m = check_centroid(*out.h_mask, c, r, cfg.checks.max_center_ratio);
  out.report.area_ratio = a.ratio;
  out.report.passed[2] = a.pass;
  out.report.centroid_ratio = m.ratio;
  out.report.passed[1] = m.pass;
  try {
    const PointPx hc = *centroid(*out.h_mask);
    out.corners = extract_corners(corner_input(*out.h_mask), hc, cfg.corners);
    const auto d = check_diagonals(*out.corners, c, r, cfg.checks.max_center_ratio);
    out.report.diag_ratio = d.ratio;
    out.report.passed[0] = d.pass;
  } catch (const CornerError&) {
    out.corners.reset();
    out.report.passed[0] = false;
  } catch (const InvalidArgument&) {
    out.corners.reset();
    out.report.passed[0] = false;
  }
  return out;
}

DetectResult detect_helipad(const GrayImage& gray, const DetectConfig& cfg) {
  DetectResult res;
  const GrayImage smooth = cfg.presmooth_sigma > 0.0 ? gaussian_blur(gray, cfg.presmooth_sigma) : gray;
  const BinaryImage bin = adaptive_threshold(smooth, cfg.thresh_block, cfg.thresh_c, cfg.polarity);
  const std::vector<CircleCandidate> circles = hough_circles(bin, smooth, cfg.hough);
  res.candidates = static_cast<int>(circles.size());
  if (circles.empty()) {
    res.failure = DetectFailure::NoCircles;
    return res;
  }
  bool any_checked = false;
  for (const CircleCandidate& circle : circles) {
    CandidateOutcome o = evaluate_candidate(gray, circle, cfg);
    if (!o.h_mask) continue;
    any_checked = true;
    if (o.corners && o.report.all_passed()) {
      const int n = cfg.extract.size;
      HelipadDetection det{circle, circle.roi(), *std::move(o.h_mask), circle.roi().w / n, o.report, *o.corners};
      res.detection = std::move(det);
      return res;
    }
    if (!res.last_report) res.last_report = o.report;
  }
  res.failure = any_checked ? DetectFailure::ChecksFailed : DetectFailure::ExtractionFailed;
  return res;
}

}  // namespace helipad
