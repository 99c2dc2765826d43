#include "sqabs/superquadric.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <nlohmann/json.hpp>

#include "sqabs/errors.hpp"

namespace sqabs {

Eigen::Matrix3d Superquadric::rotation() const {
  double r[9];
  detail::rotation_zyx(euler_zyx.x(), euler_zyx.y(), euler_zyx.z(), r);
  Eigen::Matrix3d R;
  R << r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8];
  return R;
}

void Superquadric::validate() const {
  if (!(eps1 >= kEpsMin && eps1 <= kEpsMax) ||
      !(eps2 >= kEpsMin && eps2 <= kEpsMax)) {
    throw validation_error("superquadric exponents must lie in [" +
                           std::to_string(kEpsMin) + ", " +
                           std::to_string(kEpsMax) + "]");
  }
  if (!(scale.minCoeff() > 0.0)) {
    throw validation_error("superquadric scales must be positive");
  }
  if (!scale.allFinite() || !euler_zyx.allFinite() || !translation.allFinite()) {
    throw validation_error("superquadric parameters must be finite");
  }
}

void Superquadric::to_params(double* p) const {
  p[kParamEps1] = eps1;
  p[kParamEps2] = eps2;
  p[kParamScaleX] = scale.x();
  p[kParamScaleY] = scale.y();
  p[kParamScaleZ] = scale.z();
  p[kParamYaw] = euler_zyx.x();
  p[kParamPitch] = euler_zyx.y();
  p[kParamRoll] = euler_zyx.z();
  p[kParamTransX] = translation.x();
  p[kParamTransY] = translation.y();
  p[kParamTransZ] = translation.z();
}

Superquadric Superquadric::from_params(const double* p) {
  Superquadric q;
  q.eps1 = p[kParamEps1];
  q.eps2 = p[kParamEps2];
  q.scale = {p[kParamScaleX], p[kParamScaleY], p[kParamScaleZ]};
  q.euler_zyx = {p[kParamYaw], p[kParamPitch], p[kParamRoll]};
  q.translation = {p[kParamTransX], p[kParamTransY], p[kParamTransZ]};
  return q;
}

void to_json(nlohmann::json& j, const Superquadric& q) {
  j = nlohmann::json{
      {"eps", {q.eps1, q.eps2}},
      {"scale", {q.scale.x(), q.scale.y(), q.scale.z()}},
      {"euler_zyx", {q.euler_zyx.x(), q.euler_zyx.y(), q.euler_zyx.z()}},
      {"translation", {q.translation.x(), q.translation.y(), q.translation.z()}},
  };
}

void from_json(const nlohmann::json& j, Superquadric& q) {
  const auto& eps = j.at("eps");
  const auto& scale = j.at("scale");
  const auto& euler = j.at("euler_zyx");
  const auto& trans = j.at("translation");
  if (eps.size() != 2 || scale.size() != 3 || euler.size() != 3 ||
      trans.size() != 3) {
    throw format_error("primitive record has wrong field arity");
  }
  q.eps1 = eps[0].get<double>();
  q.eps2 = eps[1].get<double>();
  q.scale = {scale[0].get<double>(), scale[1].get<double>(),
             scale[2].get<double>()};
  q.euler_zyx = {euler[0].get<double>(), euler[1].get<double>(),
                 euler[2].get<double>()};
  q.translation = {trans[0].get<double>(), trans[1].get<double>(),
                   trans[2].get<double>()};
}

double implicit_value(const Superquadric& q, const Eigen::Vector3d& x) {
  const Eigen::Vector3d body = q.rotation().transpose() * (x - q.translation);
  const double s = body.norm();
  if (s < kCenterBall) return 0.0;
  const double ux = std::abs(body.x() / s) / q.scale.x() + kPowGuard;
  const double uy = std::abs(body.y() / s) / q.scale.y() + kPowGuard;
  const double uz = std::abs(body.z() / s) / q.scale.z() + kPowGuard;
  const double xy = std::pow(ux, 2.0 / q.eps2) + std::pow(uy, 2.0 / q.eps2);
  const double f_unit =
      std::pow(xy + kPowGuard, q.eps2 / q.eps1) + std::pow(uz, 2.0 / q.eps1);
  // f(s*u) = s^(2/eps1) * f(u)
  return std::pow(s, 2.0 / q.eps1) * f_unit;
}

double approx_sdf(const Superquadric& q, const Eigen::Vector3d& x) {
  double p[kNumParams];
  q.to_params(p);
  return radial_sdf_params(p, x);
}

double truncated_sdf(const Superquadric& q, const Eigen::Vector3d& x, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("truncation must be positive");
  return std::clamp(approx_sdf(q, x), -t, t);
}

bool contains(const Superquadric& q, const Eigen::Vector3d& x) {
  return implicit_value(q, x) <= 1.0;
}

namespace {

// Emits parameter values along a 2D curve so that the polyline length (an
// upper bound on the chord) between consecutive emitted values never
// exceeds target. Endpoints are always included.
std::vector<double> march_curve(double lo, double hi, double target,
                                const std::function<Eigen::Vector2d(double)>& curve) {
  int dense = 2048;
  {
    Eigen::Vector2d prev = curve(lo);
    double perimeter = 0.0;
    for (int j = 1; j <= dense; ++j) {
      const Eigen::Vector2d pt = curve(lo + (hi - lo) * j / dense);
      perimeter += (pt - prev).norm();
      prev = pt;
    }
    const double needed = 16.0 * perimeter / target;
    dense = std::clamp(static_cast<int>(needed) + 1, 2048, 1 << 17);
  }

  std::vector<double> out;
  out.push_back(lo);
  Eigen::Vector2d prev = curve(lo);
  double acc = 0.0;
  double prev_theta = lo;
  for (int j = 1; j <= dense; ++j) {
    const double theta = lo + (hi - lo) * j / dense;
    const Eigen::Vector2d pt = curve(theta);
    const double seg = (pt - prev).norm();
    if (acc + seg > target && prev_theta > out.back()) {
      out.push_back(prev_theta);
      acc = seg;
    } else {
      acc += seg;
    }
    prev = pt;
    prev_theta = theta;
  }
  if (out.back() < hi) out.push_back(hi);
  return out;
}

}  // namespace

std::vector<Eigen::Vector3d> sample_surface(const Superquadric& q,
                                            double target_spacing) {
  if (!(target_spacing > 0.0)) {
    throw std::invalid_argument("target_spacing must be positive");
  }
  q.validate();

  // Sampling twice as fine along each parameter direction bounds the
  // diagonal neighbor distance by target_spacing as well.
  const double step = target_spacing / std::sqrt(2.0);

  // Conservative profile for the eta direction: |cross-section radius| is
  // at most sqrt(2)*max(ax, ay) for any omega when eps2 < 1.
  const double a_profile = std::sqrt(2.0) * std::max(q.scale.x(), q.scale.y());
  const auto eta_curve = [&](double eta) {
    return Eigen::Vector2d(a_profile * detail::sgn_pow(std::cos(eta), q.eps1),
                           q.scale.z() * detail::sgn_pow(std::sin(eta), q.eps1));
  };
  const std::vector<double> etas =
      march_curve(-M_PI / 2.0, M_PI / 2.0, step, eta_curve);

  const Eigen::Matrix3d R = q.rotation();
  std::vector<Eigen::Vector3d> points;
  points.reserve(etas.size() * etas.size());
  const double pole_radius = 1e-9 * std::max({q.scale.x(), q.scale.y(), q.scale.z()});
  for (const double eta : etas) {
    const double cf = detail::sgn_pow(std::cos(eta), q.eps1);
    const double z = q.scale.z() * detail::sgn_pow(std::sin(eta), q.eps1);
    if (std::abs(cf) * std::max(q.scale.x(), q.scale.y()) < pole_radius) {
      points.push_back(R * Eigen::Vector3d(0.0, 0.0, z) + q.translation);
      continue;
    }
    const auto ring_curve = [&](double omega) {
      return Eigen::Vector2d(
          q.scale.x() * cf * detail::sgn_pow(std::cos(omega), q.eps2),
          q.scale.y() * cf * detail::sgn_pow(std::sin(omega), q.eps2));
    };
    std::vector<double> omegas = march_curve(-M_PI, M_PI, step, ring_curve);
    omegas.pop_back();  // omega = pi duplicates omega = -pi
    for (const double omega : omegas) {
      const Eigen::Vector2d xy = ring_curve(omega);
      points.push_back(R * Eigen::Vector3d(xy.x(), xy.y(), z) + q.translation);
    }
  }
  return points;
}

Eigen::Vector3d euler_zyx_from_matrix(const Eigen::Matrix3d& R) {
  // R = Rz(a) * Ry(b) * Rx(c); R(2,0) = -sin(b)
  const double sb = -R(2, 0);
  if (std::abs(sb) < 1.0 - 1e-12) {
    return {std::atan2(R(1, 0), R(0, 0)), std::asin(sb),
            std::atan2(R(2, 1), R(2, 2))};
  }
  // Gimbal lock: pitch = +-pi/2, roll folded into yaw.
  const double b = sb > 0.0 ? M_PI / 2.0 : -M_PI / 2.0;
  return {std::atan2(-R(0, 1), R(1, 1)), b, 0.0};
}

}  // namespace sqabs
