#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace sqabs {

/// Convex shape-exponent range. The implicit function degenerates below
/// kEpsMin (gradient blow-up) and turns nonconvex above 2.
inline constexpr double kEpsMin = 0.05;
inline constexpr double kEpsMax = 2.0;

/// Guard added inside fractional powers so that derivatives stay finite
/// when a body-frame coordinate is exactly zero.
inline constexpr double kPowGuard = 1e-30;

/// Query points closer than this to the center take the inscribed-bound
/// branch of the radial distance (the formula is singular at the origin).
inline constexpr double kCenterBall = 1e-12;

/// Index layout of the 11-parameter vector used by the fitter.
enum ParamIndex : int {
  kParamEps1 = 0,
  kParamEps2 = 1,
  kParamScaleX = 2,
  kParamScaleY = 3,
  kParamScaleZ = 4,
  kParamYaw = 5,    // rotation about z, applied first in R = Rz*Ry*Rx
  kParamPitch = 6,  // rotation about y
  kParamRoll = 7,   // rotation about x
  kParamTransX = 8,
  kParamTransY = 9,
  kParamTransZ = 10,
};
inline constexpr int kNumParams = 11;

/// A superquadric with a general pose: two shape exponents, three scales,
/// Z-Y-X Euler angles and a translation. The rotation matrix is derived,
/// world = R * body + translation.
struct Superquadric {
  double eps1 = 1.0;
  double eps2 = 1.0;
  Eigen::Vector3d scale{1.0, 1.0, 1.0};
  Eigen::Vector3d euler_zyx{0.0, 0.0, 0.0};  // (yaw, pitch, roll)
  Eigen::Vector3d translation{0.0, 0.0, 0.0};

  Eigen::Matrix3d rotation() const;

  double min_scale() const { return scale.minCoeff(); }

  /// Throws validation_error unless exponents lie in [kEpsMin, kEpsMax]
  /// and scales are strictly positive.
  void validate() const;

  void to_params(double* p) const;
  static Superquadric from_params(const double* p);
};

void to_json(nlohmann::json& j, const Superquadric& q);
void from_json(const nlohmann::json& j, Superquadric& q);

namespace detail {

/// sign(v) * |v|^e; the superquadric parametric form uses it to keep the
/// octant sign while powering the magnitude.
inline double sgn_pow(double v, double e) {
  if (v > 0.0) return std::pow(v, e);
  if (v < 0.0) return -std::pow(-v, e);
  return 0.0;
}

/// Z-Y-X Euler rotation, R = Rz(yaw) * Ry(pitch) * Rx(roll), row-major.
template <typename T>
void rotation_zyx(const T& yaw, const T& pitch, const T& roll, T r[9]) {
  using std::cos;
  using std::sin;
  const T ca = cos(yaw), sa = sin(yaw);
  const T cb = cos(pitch), sb = sin(pitch);
  const T cc = cos(roll), sc = sin(roll);
  r[0] = ca * cb;
  r[1] = ca * sb * sc - sa * cc;
  r[2] = ca * sb * cc + sa * sc;
  r[3] = sa * cb;
  r[4] = sa * sb * sc + ca * cc;
  r[5] = sa * sb * cc - ca * sc;
  r[6] = -sb;
  r[7] = cb * sc;
  r[8] = cb * cc;
}

}  // namespace detail

/// Radial signed distance of world point x to the superquadric encoded in
/// the 11-vector p (see ParamIndex). Exact along principal axes and for
/// spheres; negative inside, positive outside, zero on the surface.
///
/// Evaluated on the normalized body direction: with s = |body point| and
/// unit direction u, the implicit value scales as f(s*u) = s^(2/eps1) f(u),
/// so d = (1 - f(p)^(-eps1/2)) * s collapses to s - f(u)^(-eps1/2). This
/// keeps the fractional powers well away from overflow for far queries.
///
/// T may be double or an autodiff scalar (e.g. ceres::Jet).
template <typename T>
T radial_sdf_params(const T* p, const Eigen::Vector3d& x) {
  using std::abs;
  using std::pow;
  using std::sqrt;

  T r[9];
  detail::rotation_zyx(p[kParamYaw], p[kParamPitch], p[kParamRoll], r);

  // body = R^T * (x - t)
  const T dx = T(x.x()) - p[kParamTransX];
  const T dy = T(x.y()) - p[kParamTransY];
  const T dz = T(x.z()) - p[kParamTransZ];
  const T qx = r[0] * dx + r[3] * dy + r[6] * dz;
  const T qy = r[1] * dx + r[4] * dy + r[7] * dz;
  const T qz = r[2] * dx + r[5] * dy + r[8] * dz;

  const T s = sqrt(qx * qx + qy * qy + qz * qz);
  if (s < T(kCenterBall)) {
    // Inscribed bound keeps the sign correct; truncation absorbs the value.
    T m = p[kParamScaleX];
    if (p[kParamScaleY] < m) m = p[kParamScaleY];
    if (p[kParamScaleZ] < m) m = p[kParamScaleZ];
    return -m;
  }

  const T ux = abs(qx / s) / p[kParamScaleX] + T(kPowGuard);
  const T uy = abs(qy / s) / p[kParamScaleY] + T(kPowGuard);
  const T uz = abs(qz / s) / p[kParamScaleZ] + T(kPowGuard);

  const T e1 = p[kParamEps1];
  const T e2 = p[kParamEps2];
  const T xy = pow(ux, T(2.0) / e2) + pow(uy, T(2.0) / e2);
  const T f_unit = pow(xy + T(kPowGuard), e2 / e1) + pow(uz, T(2.0) / e1);

  // f(u)^(-eps1/2) is the radial extent of the surface along u.
  return s - pow(f_unit, -e1 / T(2.0));
}

/// Implicit value f at world point x: 1 on the surface, < 1 inside,
/// > 1 outside. Coordinate magnitudes enter through |.| (first-octant
/// symmetry), so points on the coordinate planes are well-defined.
double implicit_value(const Superquadric& q, const Eigen::Vector3d& x);

/// Radial signed-distance approximation d_theta(x) (struct front-end of
/// radial_sdf_params).
double approx_sdf(const Superquadric& q, const Eigen::Vector3d& x);

/// approx_sdf clamped into [-t, t]. Requires t > 0.
double truncated_sdf(const Superquadric& q, const Eigen::Vector3d& x, double t);

/// True iff x lies inside or on the surface (implicit value <= 1).
bool contains(const Superquadric& q, const Eigen::Vector3d& x);

/// Near-uniform surface sampling via the parametric form. Angular steps are
/// chosen adaptively so samples that are adjacent in either parameter
/// direction sit within target_spacing of each other.
std::vector<Eigen::Vector3d> sample_surface(const Superquadric& q,
                                            double target_spacing);

/// Z-Y-X Euler angles (yaw, pitch, roll) reproducing R within the usual
/// gimbal ambiguity.
Eigen::Vector3d euler_zyx_from_matrix(const Eigen::Matrix3d& R);

}  // namespace sqabs
