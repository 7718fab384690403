#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>

#include "helipad/corners.hpp"
#include "helipad/image.hpp"

namespace helipad {

inline constexpr int kFeaturePoints = 12;
inline constexpr int kFeatureDim = 2 * kFeaturePoints;

template <typename Scalar>
using FeatureVectorT = Eigen::Matrix<Scalar, kFeatureDim, 1>;
template <typename Scalar>
using InteractionMatrixT = Eigen::Matrix<Scalar, kFeatureDim, 4>;
template <typename Scalar>
using InteractionBlockT = Eigen::Matrix<Scalar, 2, 4>;

using FeatureVector = FeatureVectorT<double>;
using InteractionMatrix = InteractionMatrixT<double>;

struct CameraIntrinsics {
  double fx = 400.0;
  double fy = 400.0;
  double cx = 319.5;
  double cy = 183.5;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidArgument("camera intrinsics: fx, fy must be > 0");
  }
};

/// 4-DOF camera-frame command (vx, vy, vz, wz). Roll/pitch rates are zero by construction.
struct ControlVelocity {
  double vx = 0.0;
  double vy = 0.0;
  double vz = 0.0;
  double wz = 0.0;

  Eigen::Vector4d vec() const { return {vx, vy, vz, wz}; }
  static ControlVelocity from(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }
  Eigen::Vector3d linear() const { return {vx, vy, vz}; }
  friend bool operator==(const ControlVelocity&, const ControlVelocity&) = default;
};

struct ServoConfig {
  double lambda = 0.8;
  double mu = 1e-6;
  double v_max = 0.5;
  double w_max = 0.5;
  /// land_eps = clamp(land_eps_frac * initial norm, land_eps_min, land_eps_max)
  double land_eps_frac = 0.05;
  double land_eps_min = 0.005;
  double land_eps_max = 0.015;
  int land_hold = 15;

  void validate() const;
};

class DegenerateConfiguration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// x = (u - cx) / fx, y = (v - cy) / fy, in label order.
FeatureVector normalize_points(const CornerSet& frame_corners, const CameraIntrinsics& k);
FeatureVector normalize_points(std::span<const PointPx> frame_pts, const CameraIntrinsics& k);

/// Two rows of the 4-DOF point interaction matrix.
template <typename Scalar>
InteractionBlockT<Scalar> interaction_row(Scalar x, Scalar y, Scalar depth) {
  if (!(depth > Scalar(0))) throw InvalidArgument("interaction_row: invalid depth (Z must be > 0)");
  const Scalar inv = Scalar(1) / depth;
  InteractionBlockT<Scalar> block;
  block << -inv, Scalar(0), x * inv, y,
           Scalar(0), -inv, y * inv, -x;
  return block;
}

/// 24x4 stack of interaction_row for all 12 points with one shared depth.
template <typename Scalar>
InteractionMatrixT<Scalar> stack_interaction(const FeatureVectorT<Scalar>& s, Scalar depth) {
  if (!(depth > Scalar(0))) throw InvalidArgument("stack_interaction: invalid depth (Z must be > 0)");
  const Scalar inv = Scalar(1) / depth;
  InteractionMatrixT<Scalar> L = InteractionMatrixT<Scalar>::Zero();
  const auto x = s(Eigen::seq(0, Eigen::last, 2));
  const auto y = s(Eigen::seq(1, Eigen::last, 2));
  L(Eigen::seq(0, Eigen::last, 2), 0).setConstant(-inv);
  L(Eigen::seq(0, Eigen::last, 2), 2) = x * inv;
  L(Eigen::seq(0, Eigen::last, 2), 3) = y;
  L(Eigen::seq(1, Eigen::last, 2), 1).setConstant(-inv);
  L(Eigen::seq(1, Eigen::last, 2), 2) = y * inv;
  L(Eigen::seq(1, Eigen::last, 2), 3) = -x;
  return L;
}

struct FeatureError {
  FeatureVector e;
  double norm = 0.0;
};

inline FeatureError compute_error(const FeatureVector& s, const FeatureVector& s_star) {
  FeatureError out{s - s_star, 0.0};
  out.norm = out.e.norm();
  return out;
}

/// Scales the linear part jointly so that max |v_i| <= v_max and clamps wz to +-w_max.
ControlVelocity cap_velocity(const ControlVelocity& v, double v_max, double w_max);

/// v = -lambda (L^T L + mu I)^-1 L^T e, then capped.
ControlVelocity control_law(const InteractionMatrix& L, const FeatureVector& e, const ServoConfig& cfg);
/// Same solve without the cap.
Eigen::Vector4d control_law_raw(const InteractionMatrix& L, const FeatureVector& e, double lambda, double mu);

/// Signed axis permutation taking camera axes to body axes: column i is the body direction of
/// camera axis i. The optical axis must map onto +-body z for the 4-DOF command to exist.
class Mounting {
 public:
  Mounting() : m_(Eigen::Matrix3d::Identity()) {}
  explicit Mounting(const Eigen::Matrix3d& m);

  /// "y,x,-z": camera x -> body +y, camera y -> body +x, camera z -> body -z.
  static Mounting parse(const std::string& spec);
  static Mounting camera_down() { return parse("y,x,-z"); }

  const Eigen::Matrix3d& matrix() const { return m_; }
  std::string to_string() const;

 private:
  Eigen::Matrix3d m_;
};

ControlVelocity to_body_frame(const ControlVelocity& v_cam, const Mounting& mounting);

/// True when the last `hold` norms are all below `eps`.
bool landing_monitor(std::span<const double> history, double eps, int hold);

/// Threshold used by the closed loop for a run whose first norm was `initial_norm`.
double landing_threshold(double initial_norm, const ServoConfig& cfg);

/// Resolves the H's half-turn symmetry between a live feature vector and the reference.
/// The first call picks the outer-group relabelling (identity or half turn) with the smaller
/// error against s*; later calls keep the outer group continuous with the previous frame.
/// The other two groups always take the relabelling whose rotation about their own centroid
/// agrees with the outer group's.
class FeatureAssociator {
 public:
  explicit FeatureAssociator(FeatureVector s_star) : s_star_(std::move(s_star)) {}

  FeatureVector associate(const FeatureVector& s);
  bool initialized() const { return initialized_; }
  /// Per-group cyclic shift applied to the last input (0 or 2).
  const std::array<int, 3>& shifts() const { return shifts_; }
  const FeatureVector& reference() const { return s_star_; }

 private:
  FeatureVector s_star_;
  FeatureVector prev_ = FeatureVector::Zero();
  std::array<int, 3> shifts_{};
  bool initialized_ = false;
};

/// Cyclic relabelling by `shift` within group `g` (labels 4g..4g+3).
FeatureVector shift_group(const FeatureVector& s, int g, int shift);

/// Reference file: 12 lines `label x y` in normalised coordinates.
void write_reference(const std::filesystem::path& path, const FeatureVector& s);
FeatureVector read_reference(const std::filesystem::path& path);

}  // namespace helipad
