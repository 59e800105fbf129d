#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace evlo {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

// Ordered 3D points (meters) with optional per-point intensity in [0,1].
struct PointCloud {
  std::vector<Vec3> points;
  std::optional<std::vector<double>> intensity;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  // Throws InvalidArgument on non-finite coordinates or an intensity
  // channel whose length differs from the point count.
  void validate() const;
};

// Rigid transform x -> R x + t.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }

  Pose inverse() const;
  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }

  Eigen::Matrix4d matrix() const;
  static Pose from_matrix(const Eigen::Matrix4d& m);

  // Frobenius norm of R^T R - I.
  double orthonormality_error() const;
  bool is_valid(double tol = 1e-9) const;
};

// XYZ-intrinsic Euler angles (roll, pitch, yaw; radians) plus translation.
struct PoseVec6 {
  Vec3 euler = Vec3::Zero();
  Vec3 translation = Vec3::Zero();

  Vec6 as_vector() const;
  static PoseVec6 from_vector(const Vec6& v);
};

// Pitch magnitude must stay below pi/2 minus this margin for the Euler form
// to be well defined.
inline constexpr double kGimbalMargin = 1e-6;

// Returns the pose applying b first, then a.
Pose compose(const Pose& a, const Pose& b);
inline Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }

PointCloud apply(const Pose& p, const PointCloud& cloud);
std::vector<Vec3> apply(const Pose& p, std::span<const Vec3> points);

Pose pose_from_vec6(const PoseVec6& v);
// Throws GimbalLock when |pitch| >= pi/2 - kGimbalMargin.
PoseVec6 vec6_from_pose(const Pose& p);

// Elementary rotations, radians.
Mat3 rot_x(double angle);
Mat3 rot_y(double angle);
Mat3 rot_z(double angle);
// Rodrigues rotation about a (not necessarily unit) axis.
Mat3 rot_axis_angle(const Vec3& axis, double angle);

// Nearest rotation matrix in the Frobenius sense (SVD projection).
Mat3 nearest_rotation(const Mat3& m);
Pose orthonormalized(const Pose& p);

// Accumulates a long product of poses, re-projecting the rotation onto
// SO(3) every kReorthonormalizeEvery compositions.
class PoseChain {
 public:
  static constexpr int kReorthonormalizeEvery = 100;

  PoseChain() = default;
  explicit PoseChain(const Pose& start) : current_(start) {}

  // current <- current * step
  const Pose& append(const Pose& step);
  const Pose& current() const { return current_; }

 private:
  Pose current_;
  int since_projection_ = 0;
};

}  // namespace evlo
