#include "evlo/core_types.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "evlo/error.hpp"

namespace evlo {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kGimbalLock: return "GimbalLock";
    case ErrorCode::kTooFewPoints: return "TooFewPoints";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNumericalUnderflow: return "NumericalUnderflow";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kMisalignedInputs: return "MisalignedInputs";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kEmptyOverlap: return "EmptyOverlap";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kNonRigid: return "NonRigid";
    case ErrorCode::kTruncatedRecord: return "TruncatedRecord";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

void PointCloud::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "non-finite coordinate at point " + std::to_string(i));
    }
  }
  if (intensity && intensity->size() != points.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "intensity length differs from point count");
  }
}

Pose Pose::inverse() const {
  Pose inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Pose Pose::from_matrix(const Eigen::Matrix4d& m) {
  return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

double Pose::orthonormality_error() const {
  return (rotation.transpose() * rotation - Mat3::Identity()).norm();
}

bool Pose::is_valid(double tol) const {
  return rotation.allFinite() && translation.allFinite() &&
         orthonormality_error() <= tol &&
         std::abs(rotation.determinant() - 1.0) <= tol;
}

Vec6 PoseVec6::as_vector() const {
  Vec6 v;
  v << euler, translation;
  return v;
}

PoseVec6 PoseVec6::from_vector(const Vec6& v) {
  return {v.head<3>(), v.tail<3>()};
}

Pose compose(const Pose& a, const Pose& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

PointCloud apply(const Pose& p, const PointCloud& cloud) {
  PointCloud out;
  out.points = apply(p, std::span<const Vec3>(cloud.points));
  out.intensity = cloud.intensity;
  return out;
}

std::vector<Vec3> apply(const Pose& p, std::span<const Vec3> points) {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& x : points) out.push_back(p * x);
  return out;
}

Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

Mat3 rot_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (n == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, axis / n).toRotationMatrix();
}

Pose pose_from_vec6(const PoseVec6& v) {
  return {rot_x(v.euler.x()) * rot_y(v.euler.y()) * rot_z(v.euler.z()),
          v.translation};
}

namespace {

// Maps atan2 output onto (-pi, pi].
double wrap_half_open(double a) {
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

}  // namespace

PoseVec6 vec6_from_pose(const Pose& p) {
  // R = Rx(a) Ry(b) Rz(c):
  //   R02 = sin b, R12 = -sin a cos b, R22 = cos a cos b,
  //   R01 = -cos b sin c, R00 = cos b cos c
  const Mat3& r = p.rotation;
  const double sb = std::clamp(r(0, 2), -1.0, 1.0);
  const double pitch = std::asin(sb);
  if (std::abs(pitch) >= std::numbers::pi / 2 - kGimbalMargin) {
    throw Error(ErrorCode::kGimbalLock,
                "pitch " + std::to_string(pitch) +
                    " rad too close to +-pi/2; use the matrix form");
  }
  PoseVec6 v;
  v.euler.x() = wrap_half_open(std::atan2(-r(1, 2), r(2, 2)));
  v.euler.y() = pitch;
  v.euler.z() = wrap_half_open(std::atan2(-r(0, 1), r(0, 0)));
  v.translation = p.translation;
  return v;
}

Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  Vec3 d(1.0, 1.0, (u * v.transpose()).determinant() < 0 ? -1.0 : 1.0);
  return u * d.asDiagonal() * v.transpose();
}

Pose orthonormalized(const Pose& p) {
  return {nearest_rotation(p.rotation), p.translation};
}

const Pose& PoseChain::append(const Pose& step) {
  current_ = compose(current_, step);
  if (++since_projection_ >= kReorthonormalizeEvery) {
    current_ = orthonormalized(current_);
    since_projection_ = 0;
  }
  return current_;
}

}  // namespace evlo
