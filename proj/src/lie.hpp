#pragma once

#include "evlo/core_types.hpp"

namespace evlo {

// Tangent vectors are ordered (omega, rho): rotation first, then translation.
Mat3 hat(const Vec3& w);
Mat3 so3_exp(const Vec3& w);
Vec3 so3_log(const Mat3& r);
Pose se3_exp(const Vec6& xi);
Vec6 se3_log(const Pose& p);

}  // namespace evlo
