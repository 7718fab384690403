#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "helipad/corners.hpp"
#include "helipad/image.hpp"
#include "helipad/imgproc.hpp"

namespace helipad {

struct CircleCandidate {
  double cx = 0.0;
  double cy = 0.0;
  double r = 0.0;
  int votes = 0;

  PointPx center() const { return {cx, cy}; }
  BBox roi() const { return BBox::square_around(center(), r); }
};

enum class CirclePolarity { DarkInside, BrightInside, Any };

struct HoughParams {
  double r_min = 24.0;
  double r_max = 180.0;
  double vote_frac = 0.6;
  int max_candidates = 10;
  CirclePolarity polarity = CirclePolarity::DarkInside;
};

/// Boundary pixels of `edges` vote along the gradient of `gray` into a centre accumulator;
/// each centre peak then gets a radius histogram and every radius whose support reaches
/// vote_frac * 2 pi r becomes a candidate. With DarkInside only the rim of a dark disk
/// inside a bright ring counts. Sorted by votes, strongest first.
std::vector<CircleCandidate> hough_circles(const BinaryImage& edges, const GrayImage& gray, const HoughParams& params);
/// Binary-only overload: gradients come from the mask itself, either polarity.
std::vector<CircleCandidate> hough_circles(const BinaryImage& edges, double r_min, double r_max, double vote_frac);

struct ExtractParams {
  int size = 228;
  double dp_eps = 2.0;
  double blur_sigma = 1.5;
  /// Fraction of the inscribed circle kept; components reaching the rim are the pad's ring.
  double rim_frac = 0.96;
};

class ExtractionFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Crop the circle's bounding square to size x size and isolate the smoothed H.
/// Throws ExtractionFailed when nothing survives the masking.
BinaryImage extract_h(const GrayImage& gray, const CircleCandidate& circle, const ExtractParams& params = {});

struct RatioCheck {
  double ratio = 0.0;
  bool pass = false;
};

struct CheckParams {
  double max_center_ratio = 0.0825;
  double area_min = 0.2;
  double area_max = 0.4;
};

RatioCheck check_diagonals(const CornerSet& corners, PointPx center, double r_mask, double max_ratio = 0.0825);
RatioCheck check_diagonals(std::span<const PointPx> outer, PointPx center, double r_mask, double max_ratio = 0.0825);
RatioCheck check_centroid(const BinaryImage& h_mask, PointPx center, double r_mask, double max_ratio = 0.0825);
RatioCheck check_area(const BinaryImage& h_mask, double r_mask, double area_min = 0.2, double area_max = 0.4);

struct CheckReport {
  double diag_ratio = 0.0;
  double centroid_ratio = 0.0;
  double area_ratio = 0.0;
  std::array<bool, 3> passed{};

  bool all_passed() const { return passed[0] && passed[1] && passed[2]; }
  std::string to_text() const;
};

struct DetectConfig {
  double presmooth_sigma = 1.0;
  int thresh_block = 31;
  int thresh_c = 15;
  Polarity polarity = Polarity::Bright;
  HoughParams hough;
  ExtractParams extract;
  CheckParams checks;
  ShiTomasiParams corners;
};

struct HelipadDetection {
  CircleCandidate circle;
  BBox roi;
  BinaryImage h_mask;
  double scale = 1.0;  // frame pixels per mask pixel
  CheckReport report;
  CornerSet corners;   // mask frame
};

enum class DetectFailure { None, NoCircles, ExtractionFailed, ChecksFailed };

struct DetectResult {
  std::optional<HelipadDetection> detection;
  DetectFailure failure = DetectFailure::None;
  int candidates = 0;
  /// Report of the best-scoring rejected candidate when nothing passed.
  std::optional<CheckReport> last_report;

  explicit operator bool() const { return detection.has_value(); }
};

std::string to_string(DetectFailure f);

/// Mask-frame centre and radius for a mask of the given size.
inline PointPx mask_center(int size) { return {0.5 * size - 0.5, 0.5 * size - 0.5}; }
inline double mask_radius(int size) { return 0.5 * size; }

PointPx mask_to_frame(PointPx p, const BBox& roi, int size);
PointPx frame_to_mask(PointPx p, const BBox& roi, int size);
/// Corner set re-expressed in full-frame pixels.
CornerSet to_frame(const CornerSet& mask_corners, const BBox& roi, int size);

/// Smoothed gray image fed to the corner detector.
GrayImage corner_input(const BinaryImage& h_mask);

/// Full pipeline: threshold -> circles -> (per candidate, strongest first) extract, corners, checks.
DetectResult detect_helipad(const GrayImage& gray, const DetectConfig& cfg = {});

/// Extraction + corners + checks for one circle; used by detection and by the tracker.
struct CandidateOutcome {
  std::optional<BinaryImage> h_mask;
  std::optional<CornerSet> corners;
  CheckReport report;
};
CandidateOutcome evaluate_candidate(const GrayImage& gray, const CircleCandidate& circle, const DetectConfig& cfg);

}  // namespace helipad
