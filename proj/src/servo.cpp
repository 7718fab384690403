#include "helipad/servo.hpp"

#include <algorithm>
#include <complex>
#include <fstream>
#include <numbers>
#include <sstream>

#include "helipad/io.hpp"

namespace helipad {

void ServoConfig::validate() const {
  if (!(lambda >= 0.0)) throw InvalidArgument("servo: lambda must be >= 0");
  if (!(mu >= 0.0)) throw InvalidArgument("servo: mu must be >= 0");
  if (!(v_max > 0.0) || !(w_max > 0.0)) throw InvalidArgument("servo: velocity caps must be > 0");
  if (land_hold < 1) throw InvalidArgument("servo: land_hold must be >= 1");
  if (!(land_eps_min <= land_eps_max)) throw InvalidArgument("servo: land_eps_min must not exceed land_eps_max");
}

FeatureVector normalize_points(std::span<const PointPx> frame_pts, const CameraIntrinsics& k) {
  k.validate();
  if (frame_pts.size() != kFeaturePoints) throw InvalidArgument("normalize_points: need 12 points");
  FeatureVector s;
  for (int i = 0; i < kFeaturePoints; ++i) {
    s[2 * i] = (frame_pts[i].u - k.cx) / k.fx;
    s[2 * i + 1] = (frame_pts[i].v - k.cy) / k.fy;
  }
  return s;
}

FeatureVector normalize_points(const CornerSet& frame_corners, const CameraIntrinsics& k) {
  return normalize_points(std::span<const PointPx>(frame_corners.pts), k);
}

ControlVelocity cap_velocity(const ControlVelocity& v, double v_max, double w_max) {
  ControlVelocity out = v;
  const double peak = std::max({std::abs(v.vx), std::abs(v.vy), std::abs(v.vz)});
  if (peak > v_max) {
    const double s = v_max / peak;
    out.vx *= s;
    out.vy *= s;
    out.vz *= s;
  }
  out.wz = std::clamp(v.wz, -w_max, w_max);
  return out;
}

Eigen::Vector4d control_law_raw(const InteractionMatrix& L, const FeatureVector& e, double lambda, double mu) {
  if (!L.allFinite()) throw InvalidArgument("control_law: interaction matrix is not finite");
  const Eigen::Matrix4d normal = L.transpose() * L + mu * Eigen::Matrix4d::Identity();
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(normal, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12) {
    throw DegenerateConfiguration("control_law: normal equations are numerically singular");
  }
  const Eigen::LLT<Eigen::Matrix4d> llt(normal);
  if (llt.info() != Eigen::Success) throw DegenerateConfiguration("control_law: Cholesky failed");
  return -lambda * llt.solve(L.transpose() * e);
}

ControlVelocity control_law(const InteractionMatrix& L, const FeatureVector& e, const ServoConfig& cfg) {
  return cap_velocity(ControlVelocity::from(control_law_raw(L, e, cfg.lambda, cfg.mu)), cfg.v_max, cfg.w_max);
}

Mounting::Mounting(const Eigen::Matrix3d& m) : m_(m) {
  for (int c = 0; c < 3; ++c) {
    int nonzero = 0;
    for (int r = 0; r < 3; ++r) {
      const double v = m(r, c);
      if (v == 1.0 || v == -1.0) {
        ++nonzero;
      } else if (v != 0.0) {
        nonzero = 99;
      }
    }
    if (nonzero != 1) throw InvalidArgument("mounting: not a signed permutation");
  }
  if (std::abs(m.determinant() - 1.0) > 1e-12) throw InvalidArgument("mounting: determinant must be +1");
  if (std::abs(m(2, 2)) != 1.0) throw InvalidArgument("mounting: optical axis must map onto body z");
}

Mounting Mounting::parse(const std::string& spec) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  std::stringstream ss(spec);
  std::string tok;
  int col = 0;
  while (std::getline(ss, tok, ',')) {
    tok.erase(std::remove_if(tok.begin(), tok.end(), [](unsigned char c) { return std::isspace(c); }), tok.end());
    if (col >= 3 || tok.empty()) throw InvalidArgument("mounting: expected three axes, e.g. \"y,x,-z\"");
    double sign = 1.0;
    if (tok[0] == '-' || tok[0] == '+') {
      sign = tok[0] == '-' ? -1.0 : 1.0;
      tok.erase(0, 1);
    }
    if (tok.size() != 1 || tok[0] < 'x' || tok[0] > 'z') throw InvalidArgument("mounting: bad axis '" + tok + "'");
    m(tok[0] - 'x', col) = sign;
    ++col;
  }
  if (col != 3) throw InvalidArgument("mounting: expected three axes, e.g. \"y,x,-z\"");
  return Mounting(m);
}

std::string Mounting::to_string() const {
  std::string out;
  for (int c = 0; c < 3; ++c) {
    for (int r = 0; r < 3; ++r) {
      if (m_(r, c) != 0.0) {
        if (!out.empty()) out += ',';
        if (m_(r, c) < 0) out += '-';
        out += static_cast<char>('x' + r);
      }
    }
  }
  return out;
}

ControlVelocity to_body_frame(const ControlVelocity& v_cam, const Mounting& mounting) {
  const Eigen::Matrix3d& m = mounting.matrix();
  const Eigen::Vector3d lin = m * v_cam.linear();
  // Angular velocity about camera z becomes m(2,2) times the body yaw rate.
  return {lin.x(), lin.y(), lin.z(), m(2, 2) * v_cam.wz};
}

bool landing_monitor(std::span<const double> history, double eps, int hold) {
  if (hold < 1 || history.size() < static_cast<std::size_t>(hold)) return false;
  return std::all_of(history.end() - hold, history.end(), [&](double n) { return n < eps; });
}

double landing_threshold(double initial_norm, const ServoConfig& cfg) {
  return std::clamp(cfg.land_eps_frac * initial_norm, cfg.land_eps_min, cfg.land_eps_max);
}

FeatureVector shift_group(const FeatureVector& s, int g, int shift) {
  FeatureVector out = s;
  for (int i = 0; i < 4; ++i) {
    const int src = 4 * g + (i + shift) % 4;
    out.segment<2>(2 * (4 * g + i)) = s.segment<2>(2 * src);
  }
  return out;
}

namespace {

// Rotation angle taking group g of `ref` onto group g of `s` (least squares, about centroids).
double group_rotation(const FeatureVector& s, const FeatureVector& ref, int g) {
  using C = std::complex<double>;
  C cs{}, cr{};
  for (int i = 0; i < 4; ++i) {
    cs += C(s[2 * (4 * g + i)], s[2 * (4 * g + i) + 1]);
    cr += C(ref[2 * (4 * g + i)], ref[2 * (4 * g + i) + 1]);
  }
  cs /= 4.0;
  cr /= 4.0;
  C acc{};
  for (int i = 0; i < 4; ++i) {
    const C a(s[2 * (4 * g + i)], s[2 * (4 * g + i) + 1]);
    const C b(ref[2 * (4 * g + i)], ref[2 * (4 * g + i) + 1]);
    acc += (a - cs) * std::conj(b - cr);
  }
  return std::arg(acc);
}

double wrap_pi(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a;
}

double group_distance(const FeatureVector& a, const FeatureVector& b, int g) {
  return (a.segment<8>(8 * g) - b.segment<8>(8 * g)).squaredNorm();
}

}  // namespace

FeatureVector FeatureAssociator::associate(const FeatureVector& s) {
  const FeatureVector& anchor = initialized_ ? prev_ : s_star_;
  FeatureVector out = s;
  const FeatureVector outer0 = s;
  const FeatureVector outer2 = shift_group(s, 0, 2);
  shifts_[0] = group_distance(outer2, anchor, 0) < group_distance(outer0, anchor, 0) ? 2 : 0;
  out = shift_group(out, 0, shifts_[0]);
  const double ref_angle = group_rotation(out, s_star_, 0);
  for (int g = 1; g < 3; ++g) {
    const FeatureVector a = shift_group(out, g, 0);
    const FeatureVector b = shift_group(out, g, 2);
    const double da = std::abs(wrap_pi(group_rotation(a, s_star_, g) - ref_angle));
    const double db = std::abs(wrap_pi(group_rotation(b, s_star_, g) - ref_angle));
    shifts_[g] = db < da ? 2 : 0;
    out = shifts_[g] ? b : a;
  }
  prev_ = out;
  initialized_ = true;
  return out;
}

void write_reference(const std::filesystem::path& path, const FeatureVector& s) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[96];
  for (int i = 0; i < kFeaturePoints; ++i) {
    std::snprintf(buf, sizeof buf, "%d %.9f %.9f\n", i, s[2 * i], s[2 * i + 1]);
    out << buf;
  }
}

FeatureVector read_reference(const std::filesystem::path& path) {
  const std::array<PointPx, 12> pts = read_corners(path);
  FeatureVector s;
  for (int i = 0; i < kFeaturePoints; ++i) {
    s[2 * i] = pts[i].u;
    s[2 * i + 1] = pts[i].v;
  }
  return s;
}

}  // namespace helipad
