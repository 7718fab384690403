#include "helipad/imgproc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>

namespace helipad {

double distance(PointPx a, PointPx b) { return std::hypot(a.u - b.u, a.v - b.v); }

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.u0 + a.w, b.u0 + b.w) - std::max(a.u0, b.u0);
  const double ih = std::min(a.v0 + a.h, b.v0 + b.h) - std::max(a.v0, b.v0);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

namespace {

inline std::uint8_t clamp_u8(double v) {
  if (v <= 0.0) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::lround(v));
}

float sample_bilinear(const GrayImage& img, double u, double v) {
  u = std::clamp(u, 0.0, static_cast<double>(img.width() - 1));
  v = std::clamp(v, 0.0, static_cast<double>(img.height() - 1));
  const int x0 = static_cast<int>(u);
  const int y0 = static_cast<int>(v);
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = u - x0;
  const double fy = v - y0;
  const double top = img(x0, y0) + fx * (img(x1, y0) - img(x0, y0));
  const double bot = img(x0, y1) + fx * (img(x1, y1) - img(x0, y1));
  return static_cast<float>(top + fy * (bot - top));
}

}  // namespace

GrayImage to_grayscale(const RgbImage& rgb) {
  if (rgb.width < 1 || rgb.height < 1 ||
      rgb.data.size() != static_cast<std::size_t>(rgb.width) * rgb.height * 3) {
    throw InvalidArgument("to_grayscale: zero-sized or malformed raster");
  }
  GrayImage out(rgb.width, rgb.height);
  for (int y = 0; y < rgb.height; ++y) {
    for (int x = 0; x < rgb.width; ++x) {
      const std::uint8_t* p = rgb.px(x, y);
      // Integer form of round(0.299 R + 0.587 G + 0.114 B).
      const int luma = (299 * p[0] + 587 * p[1] + 114 * p[2] + 500) / 1000;
      out(x, y) = static_cast<std::uint8_t>(std::min(luma, 255));
    }
  }
  return out;
}

BinaryImage adaptive_threshold(const GrayImage& img, int block, int c, Polarity polarity) {
  if (block < 3 || block % 2 == 0) {
    throw InvalidArgument("adaptive_threshold: block must be odd and >= 3, got " + std::to_string(block));
  }
  const int w = img.width();
  const int h = img.height();
  const int half = block / 2;

  // Integral image with a zero guard row/column.
  std::vector<std::int64_t> integral(static_cast<std::size_t>(w + 1) * (h + 1), 0);
  auto I = [&](int x, int y) -> std::int64_t& { return integral[static_cast<std::size_t>(y) * (w + 1) + x]; };
  for (int y = 0; y < h; ++y) {
    std::int64_t run = 0;
    const std::uint8_t* r = img.row(y);
    for (int x = 0; x < w; ++x) {
      run += r[x];
      I(x + 1, y + 1) = I(x + 1, y) + run;
    }
  }

  BinaryImage out(w, h, 0);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - half);
    const int y1 = std::min(h - 1, y + half);
    const std::uint8_t* r = img.row(y);
    std::uint8_t* o = out.row(y);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - half);
      const int x1 = std::min(w - 1, x + half);
      const std::int64_t count = static_cast<std::int64_t>(x1 - x0 + 1) * (y1 - y0 + 1);
      const std::int64_t sum = I(x1 + 1, y1 + 1) - I(x0, y1 + 1) - I(x1 + 1, y0) + I(x0, y0);
      const std::int64_t p = static_cast<std::int64_t>(r[x]) * count;
      // p > mean + c  <=>  p * count > sum + c * count, exact in integers.
      const bool fg = polarity == Polarity::Bright ? p > sum + c * count : p < sum - c * count;
      o[x] = fg ? 1 : 0;
    }
  }
  return out;
}

std::vector<float> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian_blur: sigma must be > 0");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  std::vector<float> out(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) out[i] = static_cast<float>(k[i] / sum);
  return out;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  const std::vector<float> k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int w = img.width();
  const int h = img.height();

  FloatImage tmp(w, h);
  std::vector<float> padded(w + 2 * radius);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* r = img.row(y);
    for (int x = 0; x < w + 2 * radius; ++x) padded[x] = r[std::clamp(x - radius, 0, w - 1)];
    float* t = tmp.row(y);
    for (int x = 0; x < w; ++x) {
      const float* p = padded.data() + x;
      float acc = 0.0f;
      for (int i = 0; i <= 2 * radius; ++i) acc += k[i] * p[i];
      t[x] = acc;
    }
  }
  GrayImage out(w, h);
  std::vector<float> col(w);
  for (int y = 0; y < h; ++y) {
    std::fill(col.begin(), col.end(), 0.0f);
    for (int i = -radius; i <= radius; ++i) {
      const float* t = tmp.row(std::clamp(y + i, 0, h - 1));
      const float kw = k[i + radius];
      for (int x = 0; x < w; ++x) col[x] += kw * t[x];
    }
    std::uint8_t* o = out.row(y);
    for (int x = 0; x < w; ++x) o[x] = clamp_u8(col[x]);
  }
  return out;
}

Components label_components(const BinaryImage& img, Connectivity conn) {
  const int w = img.width();
  const int h = img.height();
  Components out{Raster<int>(w, h, 0), {}};
  std::vector<IPoint> stack;
  static constexpr std::array<IPoint, 8> kN8{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, 1}, {1, -1}, {-1, -1}}};
  const int nn = conn == Connectivity::Four ? 4 : 8;

  int next = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!img(x, y) || out.labels(x, y)) continue;
      const int label = ++next;
      int size = 0;
      stack.push_back({x, y});
      out.labels(x, y) = label;
      while (!stack.empty()) {
        const IPoint p = stack.back();
        stack.pop_back();
        ++size;
        for (int k = 0; k < nn; ++k) {
          const int qx = p.x + kN8[k].x;
          const int qy = p.y + kN8[k].y;
          if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
          if (img(qx, qy) && !out.labels(qx, qy)) {
            out.labels(qx, qy) = label;
            stack.push_back({qx, qy});
          }
        }
      }
      out.sizes.push_back(size);
    }
  }
  return out;
}

std::optional<BinaryImage> largest_component(const BinaryImage& img, Connectivity conn) {
  const Components comps = label_components(img, conn);
  if (comps.sizes.empty()) return std::nullopt;
  // max_element returns the first maximum, i.e. the lowest label.
  const int best = static_cast<int>(std::max_element(comps.sizes.begin(), comps.sizes.end()) - comps.sizes.begin()) + 1;
  BinaryImage out(img.width(), img.height(), 0);
  auto src = comps.labels.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] == best ? 1 : 0;
  return out;
}

GrayImage resize(const GrayImage& img, int w, int h) {
  if (w < 1 || h < 1) throw InvalidArgument("resize: target size must be >= 1");
  if (w == img.width() && h == img.height()) return img;
  const double sx = static_cast<double>(img.width()) / w;
  const double sy = static_cast<double>(img.height()) / h;
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    const double v = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < w; ++x) {
      out(x, y) = clamp_u8(sample_bilinear(img, (x + 0.5) * sx - 0.5, v));
    }
  }
  return out;
}

BinaryImage resize(const BinaryImage& img, int w, int h) {
  return threshold(resize(to_gray(img), w, h), 127);
}

GrayImage resample_region(const GrayImage& img, const BBox& box, int w, int h) {
  if (w < 1 || h < 1) throw InvalidArgument("resample_region: target size must be >= 1");
  if (!box.valid()) throw InvalidArgument("resample_region: empty box");
  const double sx = box.w / w;
  const double sy = box.h / h;
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    const double v = box.v0 + (y + 0.5) * sy;
    std::uint8_t* o = out.row(y);
    for (int x = 0; x < w; ++x) o[x] = clamp_u8(sample_bilinear(img, box.u0 + (x + 0.5) * sx, v));
  }
  return out;
}

std::vector<Contour> trace_contours(const BinaryImage& img) {
  // Moore-neighbour tracing, directions clockwise on screen starting east.
  static constexpr std::array<IPoint, 8> kDir{{{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};
  const Components comps = label_components(img, Connectivity::Eight);
  const int w = img.width();
  const int h = img.height();
  std::vector<bool> started(comps.sizes.size(), false);
  std::vector<Contour> contours;

  auto fg = [&](int x, int y, int label) {
    return x >= 0 && y >= 0 && x < w && y < h && comps.labels(x, y) == label;
  };

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int label = comps.labels(x, y);
      if (!label || started[label - 1]) continue;
      started[label - 1] = true;

      Contour c;
      const IPoint start{x, y};
      c.push_back(start);
      IPoint p = start;
      int back = 4;  // west of the first raster pixel is background
      int first_move = -1;
      const std::size_t limit = 4 * static_cast<std::size_t>(comps.sizes[label - 1]) + 8;
      while (c.size() < limit) {
        int found = -1;
        for (int k = 1; k <= 8; ++k) {
          const int d = (back + k) % 8;
          if (fg(p.x + kDir[d].x, p.y + kDir[d].y, label)) {
            found = d;
            break;
          }
        }
        if (found < 0) break;  // isolated pixel
        if (p == start) {
          if (first_move < 0) {
            first_move = found;
          } else if (found == first_move) {
            break;
          }
        }
        p = {p.x + kDir[found].x, p.y + kDir[found].y};
        back = (found % 2 == 0) ? (found + 6) % 8 : (found + 5) % 8;
        if (p == start) {
          // Re-evaluated at the top of the loop against first_move.
          continue;
        }
        c.push_back(p);
      }
      // Traced clockwise on screen; flip to counter-clockwise keeping the start vertex.
      std::reverse(c.begin() + 1, c.end());
      contours.push_back(std::move(c));
    }
  }
  return contours;
}

Polygon to_polygon(const Contour& contour) {
  Polygon p;
  p.reserve(contour.size());
  for (const IPoint& q : contour) p.push_back({static_cast<double>(q.x), static_cast<double>(q.y)});
  return p;
}

namespace {

double point_segment_distance(PointPx p, PointPx a, PointPx b) {
  const double dx = b.u - a.u;
  const double dy = b.v - a.v;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(((p.u - a.u) * dx + (p.v - a.v) * dy) / len2, 0.0, 1.0);
  return std::hypot(p.u - (a.u + t * dx), p.v - (a.v + t * dy));
}

// Marks keep[i] for the vertices retained between first and last (inclusive, indices mod n).
void douglas_peucker(const Polygon& pts, std::size_t first, std::size_t last, double eps, std::vector<bool>& keep) {
  const std::size_t n = pts.size();
  std::vector<std::pair<std::size_t, std::size_t>> stack{{first, last}};
  while (!stack.empty()) {
    auto [a, b] = stack.back();
    stack.pop_back();
    const std::size_t span = (b + n - a) % n;
    if (span < 2) continue;
    double best = -1.0;
    std::size_t best_i = a;
    for (std::size_t k = 1; k < span; ++k) {
      const std::size_t i = (a + k) % n;
      const double d = point_segment_distance(pts[i], pts[a], pts[b % n]);
      if (d > best) {
        best = d;
        best_i = i;
      }
    }
    if (best >= eps && best > 0.0) {
      keep[best_i] = true;
      stack.push_back({a, best_i});
      stack.push_back({best_i, b});
    } else if (eps == 0.0) {
      // Exact collinear vertices are kept too when no tolerance is allowed.
      for (std::size_t k = 1; k < span; ++k) keep[(a + k) % n] = true;
    }
  }
}

}  // namespace

Polygon approx_polygon(const Polygon& contour, double eps) {
  if (contour.size() < 3) throw InvalidArgument("approx_polygon: contour needs >= 3 vertices");
  if (eps < 0.0) throw InvalidArgument("approx_polygon: eps must be >= 0");
  const std::size_t n = contour.size();
  std::size_t far = 0;
  double far_d = -1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double d = distance(contour[i], contour[0]);
    if (d > far_d) {
      far_d = d;
      far = i;
    }
  }
  std::vector<bool> keep(n, false);
  keep[0] = true;
  keep[far] = true;
  douglas_peucker(contour, 0, far, eps, keep);
  douglas_peucker(contour, far, n, eps, keep);  // index n wraps to 0
  Polygon out;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) out.push_back(contour[i]);
  }
  return out;
}

BinaryImage fill_polygon(const Polygon& poly, int w, int h) {
  BinaryImage out(w, h, 0);
  const std::size_t n = poly.size();
  if (n < 3) return out;
  std::vector<double> xs;
  for (int y = 0; y < h; ++y) {
    xs.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const PointPx a = poly[i];
      const PointPx b = poly[(i + 1) % n];
      if ((a.v > y) != (b.v > y)) xs.push_back(a.u + (y - a.v) * (b.u - a.u) / (b.v - a.v));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const int x0 = std::max(0, static_cast<int>(std::ceil(xs[k] - 1e-9)));
      const int x1 = std::min(w - 1, static_cast<int>(std::floor(xs[k + 1] + 1e-9)));
      for (int x = x0; x <= x1; ++x) out(x, y) = 1;
    }
  }
  // Pixels whose centre lies exactly on an edge belong to the shape (contour vertices are
  // boundary pixel centres, so the half-open scanline rule alone would shave one side).
  for (std::size_t i = 0; i < n; ++i) {
    const PointPx a = poly[i];
    const PointPx b = poly[(i + 1) % n];
    const int ylo = static_cast<int>(std::ceil(std::min(a.v, b.v) - 1e-9));
    const int yhi = static_cast<int>(std::floor(std::max(a.v, b.v) + 1e-9));
    for (int y = std::max(0, ylo); y <= std::min(h - 1, yhi); ++y) {
      if (std::abs(b.v - a.v) < 1e-12) {
        const int x0 = static_cast<int>(std::ceil(std::min(a.u, b.u) - 1e-9));
        const int x1 = static_cast<int>(std::floor(std::max(a.u, b.u) + 1e-9));
        for (int x = std::max(0, x0); x <= std::min(w - 1, x1); ++x) out(x, y) = 1;
      } else {
        const double x = a.u + (y - a.v) * (b.u - a.u) / (b.v - a.v);
        const double rx = std::round(x);
        if (std::abs(x - rx) < 1e-9 && rx >= 0 && rx < w) out(static_cast<int>(rx), y) = 1;
      }
    }
  }
  return out;
}

int otsu_threshold(const GrayImage& img) {
  std::array<std::int64_t, 256> hist{};
  for (std::uint8_t p : img.pixels()) ++hist[p];
  const double total = static_cast<double>(img.size());
  double sum_all = 0.0;
  for (int i = 0; i < 256; ++i) sum_all += static_cast<double>(i) * hist[i];
  double w_bg = 0.0;
  double sum_bg = 0.0;
  double best = -1.0;
  int best_t = 0;
  for (int t = 0; t < 256; ++t) {
    w_bg += hist[t];
    if (w_bg == 0.0) continue;
    const double w_fg = total - w_bg;
    if (w_fg == 0.0) break;
    sum_bg += static_cast<double>(t) * hist[t];
    const double m_bg = sum_bg / w_bg;
    const double m_fg = (sum_all - sum_bg) / w_fg;
    const double between = w_bg * w_fg * (m_bg - m_fg) * (m_bg - m_fg);
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  return best_t;
}

BinaryImage threshold(const GrayImage& img, int t) {
  BinaryImage out(img.width(), img.height(), 0);
  auto src = img.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > t ? 1 : 0;
  return out;
}

GrayImage to_gray(const BinaryImage& mask) {
  GrayImage out(mask.width(), mask.height(), 0);
  auto src = mask.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? 255 : 0;
  return out;
}

std::optional<PointPx> centroid(const BinaryImage& mask) {
  double su = 0.0;
  double sv = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < mask.height(); ++y) {
    const std::uint8_t* r = mask.row(y);
    for (int x = 0; x < mask.width(); ++x) {
      if (r[x]) {
        su += x;
        sv += y;
        ++n;
      }
    }
  }
  if (n == 0) return std::nullopt;
  return PointPx{su / n, sv / n};
}

std::size_t count_foreground(const BinaryImage& mask) {
  std::size_t n = 0;
  for (std::uint8_t p : mask.pixels()) n += p ? 1 : 0;
  return n;
}

}  // namespace helipad
