#include "lie.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace evlo {

namespace {

constexpr double kSmallAngle = 1e-8;
// Below this angle the cancellation-prone coefficients use their series.
constexpr double kSeriesAngle = 1e-2;

// (1 - cos t) / t^2
double coef_b(double t) {
  const double s = std::sin(0.5 * t) / t;
  return 2.0 * s * s;
}

// (t - sin t) / t^3
double coef_c(double t) {
  const double t2 = t * t;
  if (t < kSeriesAngle) return 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
  return (t - std::sin(t)) / (t2 * t);
}

// (1 - t sin t / (2 (1 - cos t))) / t^2
double coef_log(double t) {
  const double t2 = t * t;
  if (t < kSeriesAngle) return 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  return 1.0 / t2 - (1.0 + std::cos(t)) / (2.0 * t * std::sin(t));
}

}  // namespace

Mat3 hat(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return m;
}

Mat3 so3_exp(const Vec3& w) {
  const double theta = w.norm();
  const Mat3 k = hat(w);
  if (theta < kSmallAngle) return Mat3::Identity() + k + 0.5 * k * k;
  return Mat3::Identity() + (std::sin(theta) / theta) * k + coef_b(theta) * k * k;
}

Vec3 so3_log(const Mat3& r) {
  const Vec3 v(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double s = 0.5 * v.norm();
  const double c = 0.5 * (r.trace() - 1.0);
  const double theta = std::atan2(s, c);
  if (theta < kSmallAngle) return 0.5 * v;
  if (c < 0.0 && s < 1e-6) {
    // Near a half turn: recover the axis from the symmetric part.
    const Mat3 b = 0.25 * (r + r.transpose()) + 0.5 * Mat3::Identity();
    int k = 0;
    b.diagonal().maxCoeff(&k);
    Vec3 axis = b.col(k).normalized();
    if (axis.dot(v) < 0.0) axis = -axis;
    return theta * axis;
  }
  return (theta / (2.0 * s)) * v;
}

Pose se3_exp(const Vec6& xi) {
  const Vec3 w = xi.head<3>(), rho = xi.tail<3>();
  const double theta = w.norm();
  const Mat3 k = hat(w);
  Mat3 v;
  if (theta < kSmallAngle) {
    v = Mat3::Identity() + 0.5 * k + (1.0 / 6.0) * k * k;
  } else {
    v = Mat3::Identity() + coef_b(theta) * k + coef_c(theta) * k * k;
  }
  return {so3_exp(w), v * rho};
}

Vec6 se3_log(const Pose& p) {
  const Vec3 w = so3_log(p.rotation);
  const double theta = w.norm();
  const Mat3 k = hat(w);
  Mat3 v_inv;
  if (theta < kSmallAngle) {
    v_inv = Mat3::Identity() - 0.5 * k + (1.0 / 12.0) * k * k;
  } else {
    v_inv = Mat3::Identity() - 0.5 * k + coef_log(theta) * k * k;
  }
  Vec6 xi;
  xi << w, v_inv * p.translation;
  return xi;
}

}  // namespace evlo
