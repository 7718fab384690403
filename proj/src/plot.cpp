#include "helipad/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "helipad/io.hpp"

namespace helipad {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

// Roughly five ticks at 1, 2 or 5 times a power of ten.
double tick_step(double span) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  return (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0) * mag;
}

}  // namespace

std::string svg_line_plot(const LineSeries& s, const std::string& title, const std::string& xlabel,
                          const std::string& ylabel) {
  constexpr double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool any = false;
  for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
    if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
    if (!any) {
      x0 = x1 = s.x[i];
      y1 = s.y[i];
      any = true;
    }
    x0 = std::min(x0, s.x[i]);
    x1 = std::max(x1, s.x[i]);
    y1 = std::max(y1, s.y[i]);
  }
  y0 = 0.0;
  if (x1 <= x0) x1 = x0 + 1.0;
  if (y1 <= y0) y1 = y0 + 1.0;
  const double xs = tick_step(x1 - x0), ys = tick_step(y1 - y0);
  x1 = std::ceil(x1 / xs) * xs;
  y1 = std::ceil(y1 / ys) * ys;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                W, H, W, H);
  out += buf;
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"black\">\n";
  std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">%s</text>\n",
                W / 2, escape(title).c_str());
  out += buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%s</text>\n", (L + W - R) / 2,
                H - 12, escape(xlabel).c_str());
  out += buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"16\" y=\"%.1f\" text-anchor=\"middle\" transform=\"rotate(-90 16 %.1f)\">%s</text>\n",
                (T + H - B) / 2, (T + H - B) / 2, escape(ylabel).c_str());
  out += buf;
  for (double x = x0; x <= x1 + 1e-9 * xs; x += xs) {
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>"
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%g</text>\n",
                  px(x), T, px(x), H - B, px(x), H - B + 16, x);
    out += buf;
  }
  for (double y = y0; y <= y1 + 1e-9 * ys; y += ys) {
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>"
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%g</text>\n",
                  L, py(y), W - R, py(y), L - 6, py(y) + 4, y);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"black\"/>\n",
                L, T, W - L - R, H - T - B);
  out += buf;
  out += "</g>\n";

  // One polyline per finite run.
  std::string pts;
  auto flush = [&] {
    if (!pts.empty()) out += "<polyline fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    pts.clear();
  };
  for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
    if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
      flush();
      continue;
    }
    std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", pts.empty() ? "" : " ", px(s.x[i]), py(s.y[i]));
    pts += buf;
  }
  flush();
  out += "</svg>\n";
  return out;
}

void write_svg(const std::filesystem::path& path, const std::string& svg) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << svg;
}

}  // namespace helipad
