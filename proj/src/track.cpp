#include "helipad/track.hpp"

#include <algorithm>
#include <cmath>

namespace helipad {

namespace {

FloatImage downsample(const FloatImage& src) {
  const int w = (src.width() + 1) / 2;
  const int h = (src.height() + 1) / 2;
  FloatImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int x0 = 2 * x, y0 = 2 * y;
      out(x, y) = 0.25f * (src.at_clamped(x0, y0) + src.at_clamped(x0 + 1, y0) + src.at_clamped(x0, y0 + 1) +
                           src.at_clamped(x0 + 1, y0 + 1));
    }
  }
  return out;
}

void gradients(const FloatImage& img, FloatImage& gx, FloatImage& gy) {
  const int w = img.width(), h = img.height();
  gx = FloatImage(w, h);
  gy = FloatImage(w, h);
  for (int y = 0; y < h; ++y) {
    const float* up = img.row(std::max(y - 1, 0));
    const float* dn = img.row(std::min(y + 1, h - 1));
    const float* r = img.row(y);
    float* ox = gx.row(y);
    float* oy = gy.row(y);
    for (int x = 0; x < w; ++x) {
      ox[x] = 0.5f * (r[std::min(x + 1, w - 1)] - r[std::max(x - 1, 0)]);
      oy[x] = 0.5f * (dn[x] - up[x]);
    }
  }
}

// Bilinear weights shared by every sample of a window at a common fractional offset.
struct Bilinear {
  int x0, y0;
  float w00, w10, w01, w11;

  Bilinear(double u, double v) {
    const double fu = std::floor(u), fv = std::floor(v);
    x0 = static_cast<int>(fu);
    y0 = static_cast<int>(fv);
    const float ax = static_cast<float>(u - fu), ay = static_cast<float>(v - fv);
    w00 = (1 - ax) * (1 - ay);
    w10 = ax * (1 - ay);
    w01 = (1 - ax) * ay;
    w11 = ax * ay;
  }

  float at(const FloatImage& img, int dx, int dy) const {
    const int x = x0 + dx, y = y0 + dy;
    if (x >= 0 && y >= 0 && x + 1 < img.width() && y + 1 < img.height()) {
      const float* r0 = img.row(y) + x;
      const float* r1 = img.row(y + 1) + x;
      return w00 * r0[0] + w10 * r0[1] + w01 * r1[0] + w11 * r1[1];
    }
    return w00 * img.at_clamped(x, y) + w10 * img.at_clamped(x + 1, y) + w01 * img.at_clamped(x, y + 1) +
           w11 * img.at_clamped(x + 1, y + 1);
  }

  // Samples the (2*half+1)^2 window row-major into out.
  void window(const FloatImage& img, int half, float* out) const {
    if (x0 - half >= 0 && y0 - half >= 0 && x0 + half + 1 < img.width() && y0 + half + 1 < img.height()) {
      for (int dy = -half; dy <= half; ++dy) {
        const float* r0 = img.row(y0 + dy) + x0 - half;
        const float* r1 = img.row(y0 + dy + 1) + x0 - half;
        for (int i = 0; i <= 2 * half; ++i) *out++ = w00 * r0[i] + w10 * r0[i + 1] + w01 * r1[i] + w11 * r1[i + 1];
      }
      return;
    }
    for (int dy = -half; dy <= half; ++dy) {
      for (int dx = -half; dx <= half; ++dx) *out++ = at(img, dx, dy);
    }
  }
};

double ncc(const FloatImage& a, PointPx pa, const FloatImage& b, PointPx pb, int patch) {
  const int half = patch / 2;
  const Bilinear sa(pa.u, pa.v), sb(pb.u, pb.v);
  double s1 = 0, s2 = 0, s11 = 0, s22 = 0, s12 = 0;
  const int n = patch * patch;
  for (int dy = -half; dy <= half; ++dy) {
    for (int dx = -half; dx <= half; ++dx) {
      const double x = sa.at(a, dx, dy), y = sb.at(b, dx, dy);
      s1 += x;
      s2 += y;
      s11 += x * x;
      s22 += y * y;
      s12 += x * y;
    }
  }
  const double va = s11 - s1 * s1 / n, vb = s22 - s2 * s2 / n;
  if (va <= 1e-12 || vb <= 1e-12) return 0.0;
  return (s12 - s1 * s2 / n) / std::sqrt(va * vb);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (v.size() % 2) return v[mid];
  const double hi = v[mid];
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

}  // namespace

Pyramid Pyramid::build(const GrayImage& frame, int levels) {
  if (levels < 1) throw InvalidArgument("pyramid: levels must be >= 1");
  Pyramid p;
  FloatImage base(frame.width(), frame.height());
  auto src = frame.pixels();
  auto dst = base.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * (1.0f / 255.0f);
  p.img.push_back(std::move(base));
  for (int l = 1; l < levels; ++l) {
    if (p.img.back().width() < 8 || p.img.back().height() < 8) break;
    p.img.push_back(downsample(p.img.back()));
  }
  p.gx.resize(p.img.size());
  p.gy.resize(p.img.size());
  for (std::size_t l = 0; l < p.img.size(); ++l) gradients(p.img[l], p.gx[l], p.gy[l]);
  return p;
}

FlowResult lk_flow(const Pyramid& prev, const Pyramid& next, std::span<const PointPx> pts, int win) {
  if (prev.img.empty() || next.img.empty() || prev.img[0].width() != next.img[0].width() ||
      prev.img[0].height() != next.img[0].height()) {
    throw InvalidArgument("lk_flow: images differ in size");
  }
  if (win < 3 || win % 2 == 0) throw InvalidArgument("lk_flow: window must be odd and >= 3");
  const int levels = std::min(prev.levels(), next.levels());
  const int half = win / 2;
  const int n = win * win;
  constexpr double kMinEig = 1e-4;
  constexpr int kMaxIter = 20;
  constexpr double kEps = 0.01;

  FlowResult out;
  out.pts.resize(pts.size());
  out.status.assign(pts.size(), true);
  std::vector<float> tmpl(n), tix(n), tiy(n), warped(n);

  auto min_eig_at = [&](PointPx p) {
    const Bilinear b(p.u, p.v);
    b.window(prev.gx[0], half, tix.data());
    b.window(prev.gy[0], half, tiy.data());
    double a11 = 0, a12 = 0, a22 = 0;
    for (int i = 0; i < n; ++i) {
      a11 += tix[i] * tix[i];
      a12 += tix[i] * tiy[i];
      a22 += tiy[i] * tiy[i];
    }
    return (a11 + a22 - std::sqrt((a11 - a22) * (a11 - a22) + 4 * a12 * a12)) / (2.0 * n);
  };

  for (std::size_t k = 0; k < pts.size(); ++k) {
    // Untextured at full resolution: the final level would reject it anyway.
    if (min_eig_at(pts[k]) < kMinEig) {
      out.pts[k] = pts[k];
      out.status[k] = false;
      continue;
    }
    double gu = 0.0, gv = 0.0;  // displacement guess at the current level
    bool ok = true;
    for (int l = levels - 1; l >= 0; --l) {
      const double scale = 1.0 / (1 << l);
      const double pu = pts[k].u * scale, pv = pts[k].v * scale;
      const FloatImage& I = prev.img[l];
      const FloatImage& J = next.img[l];
      const Bilinear bt(pu, pv);
      bt.window(I, half, tmpl.data());
      bt.window(prev.gx[l], half, tix.data());
      bt.window(prev.gy[l], half, tiy.data());
      double a11 = 0, a12 = 0, a22 = 0;
      for (int i = 0; i < n; ++i) {
        a11 += tix[i] * tix[i];
        a12 += tix[i] * tiy[i];
        a22 += tiy[i] * tiy[i];
      }
      const double det = a11 * a22 - a12 * a12;
      const double min_eig = (a11 + a22 - std::sqrt((a11 - a22) * (a11 - a22) + 4 * a12 * a12)) / (2.0 * n);
      if (min_eig < kMinEig || det < 1e-15) {
        if (l == 0) ok = false;
        if (l > 0) {
          gu *= 2.0;
          gv *= 2.0;
        }
        continue;
      }
      for (int it = 0; it < kMaxIter; ++it) {
        Bilinear(pu + gu, pv + gv).window(J, half, warped.data());
        double b1 = 0, b2 = 0;
        for (int i = 0; i < n; ++i) {
          const double diff = tmpl[i] - warped[i];
          b1 += diff * tix[i];
          b2 += diff * tiy[i];
        }
        const double du = (a22 * b1 - a12 * b2) / det;
        const double dv = (a11 * b2 - a12 * b1) / det;
        gu += du;
        gv += dv;
        if (!std::isfinite(gu) || !std::isfinite(gv)) {
          ok = false;
          break;
        }
        if (du * du + dv * dv < kEps * kEps) break;
      }
      if (!ok) break;
      if (l > 0) {
        gu *= 2.0;
        gv *= 2.0;
      }
    }
    const PointPx q{pts[k].u + gu, pts[k].v + gv};
    out.pts[k] = q;
    const int w = prev.img[0].width(), h = prev.img[0].height();
    if (!ok || q.u < 0 || q.v < 0 || q.u > w - 1 || q.v > h - 1) out.status[k] = false;
  }
  return out;
}

FlowResult lk_flow(const GrayImage& prev, const GrayImage& next, std::span<const PointPx> pts, int levels, int win) {
  if (prev.width() != next.width() || prev.height() != next.height()) {
    throw InvalidArgument("lk_flow: images differ in size");
  }
  return lk_flow(Pyramid::build(prev, levels), Pyramid::build(next, levels), pts, win);
}

TrackerState::TrackerState(const BBox& box, const GrayImage& frame, const TrackParams& params)
    : bbox(box), prev_frame(frame), prev_pyramid(Pyramid::build(frame, params.levels)), grid(params.grid),
      levels(params.levels) {
  if (!box.valid() || !box.intersects(frame.width(), frame.height())) {
    throw InvalidArgument("tracker: box must be non-empty and overlap the frame");
  }
}

TrackUpdate median_flow_update(TrackerState& state, const GrayImage& frame, const TrackParams& params) {
  TrackUpdate res;
  const BBox& box = state.bbox;
  const int k = params.grid;
  const int w = frame.width(), h = frame.height();
  std::vector<PointPx> seeds;
  seeds.reserve(static_cast<std::size_t>(k) * k);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < k; ++i) {
      const double u = box.u0 + (i + 0.5) * box.w / k;
      const double v = box.v0 + (j + 0.5) * box.h / k;
      if (u >= 0 && v >= 0 && u <= w - 1 && v <= h - 1) seeds.push_back({u, v});
    }
  }
  Pyramid next = Pyramid::build(frame, params.levels);
  const FlowResult fwd = lk_flow(state.prev_pyramid, next, seeds, params.win);
  std::vector<std::size_t> live;
  std::vector<PointPx> ahead;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (fwd.status[i]) {
      live.push_back(i);
      ahead.push_back(fwd.pts[i]);
    }
  }
  const FlowResult back = lk_flow(next, state.prev_pyramid, ahead, params.win);
  FlowResult bwd{std::vector<PointPx>(seeds.size()), std::vector<bool>(seeds.size(), false)};
  for (std::size_t j = 0; j < live.size(); ++j) {
    bwd.pts[live[j]] = back.pts[j];
    bwd.status[live[j]] = back.status[j];
  }

  struct Track {
    PointPx from, to;
    double fb;
  };
  std::vector<Track> valid;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (!fwd.status[i] || !bwd.status[i]) continue;
    if (ncc(state.prev_pyramid.img[0], seeds[i], next.img[0], fwd.pts[i], params.ncc_patch) < params.ncc_min) continue;
    valid.push_back({seeds[i], fwd.pts[i], distance(seeds[i], bwd.pts[i])});
  }
  if (valid.empty()) {
    res.failure = TrackFailure::TooFewPoints;
    return res;
  }
  std::vector<double> fbs;
  fbs.reserve(valid.size());
  for (const Track& t : valid) fbs.push_back(t.fb);
  res.median_fb = median(fbs);
  std::stable_sort(valid.begin(), valid.end(), [](const Track& a, const Track& b) { return a.fb < b.fb; });
  valid.resize((valid.size() + 1) / 2);
  res.survivors = static_cast<int>(valid.size());
  if (res.survivors < params.min_survivors) {
    res.failure = TrackFailure::TooFewPoints;
    return res;
  }
  if (res.median_fb > params.fb_max) {
    res.failure = TrackFailure::ForwardBackward;
    return res;
  }

  std::vector<double> dxs, dys, ratios;
  for (const Track& t : valid) {
    dxs.push_back(t.to.u - t.from.u);
    dys.push_back(t.to.v - t.from.v);
  }
  for (std::size_t i = 0; i < valid.size(); ++i) {
    for (std::size_t j = i + 1; j < valid.size(); ++j) {
      const double d0 = distance(valid[i].from, valid[j].from);
      if (d0 < 1e-6) continue;
      ratios.push_back(distance(valid[i].to, valid[j].to) / d0);
    }
  }
  const double dx = median(dxs), dy = median(dys);
  res.scale = ratios.empty() ? 1.0 : median(ratios);
  const PointPx c = box.center();
  BBox nb{c.u + dx - 0.5 * box.w * res.scale, c.v + dy - 0.5 * box.h * res.scale, box.w * res.scale,
          box.h * res.scale};
  if (!nb.valid() || !nb.intersects(w, h)) {
    res.failure = TrackFailure::LeftFrame;
    return res;
  }
  state.bbox = nb;
  state.prev_frame = frame;
  state.prev_pyramid = std::move(next);
  res.bbox = nb;
  return res;
}

const char* to_string(Mode m) { return m == Mode::Tracking ? "Tracking" : "Detecting"; }

SupervisorOutput supervisor_step(SupervisorState& sup, const GrayImage& frame, const SupervisorConfig& cfg) {
  SupervisorOutput out;
  const int n = cfg.detect.extract.size;

  const bool force_detect = sup.mode == Mode::Tracking && cfg.track.redetect_every > 0 &&
                            sup.tracked_frames >= cfg.track.redetect_every;
  if (sup.mode == Mode::Tracking && !force_detect) {
    TrackUpdate upd = median_flow_update(*sup.tracker, frame, cfg.track);
    if (upd) {
      const BBox& b = *upd.bbox;
      const CircleCandidate circle{b.center().u, b.center().v, 0.5 * std::min(b.w, b.h), 0};
      try {
        const BinaryImage mask = extract_h(frame, circle, cfg.detect.extract);
        const RatioCheck area = check_area(mask, mask_radius(n), cfg.detect.checks.area_min, cfg.detect.checks.area_max);
        out.area_ratio = area.ratio;
        out.bbox = b;
        if (area.pass) {
          const CornerSet mc = extract_corners(corner_input(mask), *centroid(mask), cfg.detect.corners);
          out.corners = to_frame(mc, circle.roi(), n);
          out.mode = Mode::Tracking;
          sup.consecutive_failures = 0;
          ++sup.tracked_frames;
          return out;
        }
      } catch (const ExtractionFailed&) {
      } catch (const CornerError&) {
      }
    }
    // Tracker failure, area-check failure or no usable corners: back to detection.
    sup.mode = Mode::Detecting;
    sup.tracker.reset();
    ++sup.consecutive_failures;
    out.mode = Mode::Detecting;
    out.corners.reset();
    return out;
  }

  DetectResult det = detect_helipad(frame, cfg.detect);
  if (!det) {
    if (force_detect) {
      // Keep the existing track alive; retry the refresh next frame.
      sup.tracked_frames = 0;
      sup.mode = Mode::Tracking;
      return supervisor_step(sup, frame, cfg);
    }
    sup.mode = Mode::Detecting;
    ++sup.consecutive_failures;
    out.mode = Mode::Detecting;
    return out;
  }
  HelipadDetection& d = *det.detection;
  sup.mode = Mode::Tracking;
  sup.tracker.emplace(d.roi, frame, cfg.track);
  sup.consecutive_failures = 0;
  sup.tracked_frames = 0;
  out.mode = Mode::Tracking;
  out.corners = to_frame(d.corners, d.roi, n);
  out.bbox = d.roi;
  out.area_ratio = d.report.area_ratio;
  out.detected_this_frame = true;
  sup.last_detection = std::move(d);
  return out;
}

}  // namespace helipad
