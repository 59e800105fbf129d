#pragma once

#include <Eigen/Core>

#include "evlo/core_types.hpp"

namespace evlo {

inline constexpr int kDescriptorDim = 16;
inline constexpr int kDefaultNeighbors = 16;
inline constexpr double kDefaultTemperature = 0.005;

// Descriptor slot layout.
namespace slot {
// 3: horizontal distance, signed height and distance to the centroid, / r
inline constexpr int kPosition = 0;
// 3: radial, tangential and vertical parts of the k-NN centroid offset, / r
inline constexpr int kNeighborOffset = 3;
inline constexpr int kEigenvalues = 6;    // 3: descending, sum to 1
inline constexpr int kLinearity = 9;
inline constexpr int kPlanarity = 10;
inline constexpr int kScattering = 11;
inline constexpr int kHeight = 12;        // height above minimum / extent
inline constexpr int kNeighborSpacing = 13;
inline constexpr int kReserved = 14;      // 2 zero slots
}  // namespace slot

// N x 16 matrix of unit-norm rows, one per source point.
using FeatureMatrix = Eigen::MatrixXd;
// N_src x N_tgt nonnegative costs.
using CostMatrix = Eigen::MatrixXd;

// Principal-axis frame of a point set: centroid plus axes
// sorted by decreasing variance, each oriented so the third moment of the
// projected coordinates is nonnegative.
struct CanonicalFrame {
  Vec3 centroid = Vec3::Zero();
  Mat3 axes = Mat3::Identity();  // columns
  double radius = 0.0;           // bounding-sphere radius about the centroid
};
CanonicalFrame canonical_frame(std::span<const Vec3> points);

// Handcrafted per-point descriptor. Positions and offsets are cylindrical
// coordinates about the canonical vertical axis (the least-variance axis
// through the centroid), so rows are invariant to rigid motion of the whole
// cloud and do not depend on the in-plane principal directions.
// Throws TooFewPoints when size <= k, InvalidArgument when k < 4,
// DegenerateGeometry when all points coincide.
FeatureMatrix compute_descriptors(const PointCloud& cloud,
                                  int k = kDefaultNeighbors);

// Row i is -log softmax_j(tgt_j . src_i / temperature).
CostMatrix matching_cost(const FeatureMatrix& src, const FeatureMatrix& tgt,
                         double temperature = kDefaultTemperature);

}  // namespace evlo
