#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "helipad/image.hpp"

namespace helipad {

enum class CornerErrorKind { Shortage, AmbiguousGrouping, AmbiguousOrder };

class CornerError : public std::runtime_error {
 public:
  CornerError(CornerErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  CornerErrorKind kind() const { return kind_; }

 private:
  CornerErrorKind kind_;
};

using Quad = std::array<PointPx, 4>;

struct CornerGroups {
  Quad outer;   // largest hull area
  Quad inner;   // largest of the remaining eight
  Quad center;  // the crossbar rectangle
};

/// The 12 labelled H corners: 0-3 outer border, 4-7 inner border, 8-11 centre rectangle.
struct CornerSet {
  std::array<PointPx, 12> pts;
  PointPx centroid;

  Quad group(int g) const { return {pts[4 * g], pts[4 * g + 1], pts[4 * g + 2], pts[4 * g + 3]}; }
};

struct ShiTomasiParams {
  int count = 12;
  double quality = 0.05;
  double min_dist = 10.0;
  int refine_half = 4;  // 0 disables gradient refinement
};

/// Minimum eigenvalue of the 3x3-summed structure tensor of Sobel gradients.
FloatImage min_eigen_response(const GrayImage& img);

/// Strongest `n` response maxima above quality * max, greedily spaced by `min_dist`,
/// refined by a per-axis quadratic fit of the response. Sorted by response, strongest first.
/// Throws CornerError(Shortage) when fewer than `n` survive.
/// With `refine_half` > 0 each point is then moved by refine_corner.
std::vector<PointPx> shi_tomasi(const GrayImage& img, int n, double quality, double min_dist, int refine_half = 4);

/// Least-squares point whose offsets to the pixels of a (2 half + 1)^2 window are
/// orthogonal to their image gradients. Removes the inward bias of the response peak.
/// Returns `p` unchanged when the window is untextured or the solution leaves it.
PointPx refine_corner(const GrayImage& img, PointPx p, int half);

double convex_hull_area(std::span<const PointPx> pts);

/// Exhaustive convex-area partition of exactly 12 points.
CornerGroups classify_groups(std::span<const PointPx> pts);

/// Angle sort about the centroid (descending, ties nearer-first) followed by the
/// one-step cyclic shift when the first edge is the longer (shorter if `invert`) one.
Quad order_group(const Quad& group, PointPx centroid, bool invert);

CornerSet label_corners(const CornerGroups& groups, PointPx centroid);

/// shi_tomasi -> classify_groups -> label_corners.
CornerSet extract_corners(const GrayImage& img, PointPx centroid, const ShiTomasiParams& params = {});

/// Golden-file format: 12 lines `label u v`.
void write_corners(const std::filesystem::path& path, const CornerSet& set);
std::array<PointPx, 12> read_corners(const std::filesystem::path& path);

}  // namespace helipad
