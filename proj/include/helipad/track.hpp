#pragma once

#include <optional>
#include <vector>

#include "helipad/corners.hpp"
#include "helipad/detect.hpp"
#include "helipad/image.hpp"

namespace helipad {

/// Image pyramid with central-difference gradients at every level, intensities scaled to [0, 1].
struct Pyramid {
  std::vector<FloatImage> img;
  std::vector<FloatImage> gx;
  std::vector<FloatImage> gy;

  static Pyramid build(const GrayImage& frame, int levels);
  int levels() const { return static_cast<int>(img.size()); }
};

struct FlowResult {
  std::vector<PointPx> pts;
  std::vector<bool> status;
};

/// Pyramidal iterative Lucas-Kanade; `win` is the full window side (odd).
FlowResult lk_flow(const GrayImage& prev, const GrayImage& next, std::span<const PointPx> pts, int levels, int win);
FlowResult lk_flow(const Pyramid& prev, const Pyramid& next, std::span<const PointPx> pts, int win);

struct TrackParams {
  int grid = 10;
  int levels = 3;
  int win = 21;
  double fb_max = 2.0;
  int min_survivors = 10;
  int ncc_patch = 7;
  double ncc_min = 0.7;
  /// Force a fresh detection every N tracked frames; 0 disables.
  int redetect_every = 0;
};

struct TrackerState {
  BBox bbox;
  GrayImage prev_frame;
  Pyramid prev_pyramid;
  int grid = 10;
  int levels = 3;

  TrackerState() = default;
  TrackerState(const BBox& box, const GrayImage& frame, const TrackParams& params);
};

enum class TrackFailure { None, TooFewPoints, ForwardBackward, LeftFrame };

struct TrackUpdate {
  std::optional<BBox> bbox;
  TrackFailure failure = TrackFailure::None;
  double median_fb = 0.0;
  double scale = 1.0;
  int survivors = 0;

  explicit operator bool() const { return bbox.has_value(); }
};

/// One Median-Flow step. On success the state advances to `frame`; on failure it is untouched.
TrackUpdate median_flow_update(TrackerState& state, const GrayImage& frame, const TrackParams& params);

enum class Mode { Detecting, Tracking };
const char* to_string(Mode m);

struct SupervisorConfig {
  DetectConfig detect;
  TrackParams track;
};

struct SupervisorState {
  Mode mode = Mode::Detecting;
  std::optional<HelipadDetection> last_detection;
  std::optional<TrackerState> tracker;
  int consecutive_failures = 0;
  int tracked_frames = 0;
};

struct SupervisorOutput {
  Mode mode = Mode::Detecting;              // mode after this frame
  std::optional<CornerSet> corners;         // full-frame pixels
  std::optional<BBox> bbox;                 // tracked / detected region
  std::optional<double> area_ratio;
  bool detected_this_frame = false;
};

/// Detect <-> track mode machine. Tracking frames re-extract the H inside the tracked box and
/// run only the area check; any failure drops back to detection with no output for that frame.
SupervisorOutput supervisor_step(SupervisorState& sup, const GrayImage& frame, const SupervisorConfig& cfg);

}  // namespace helipad
