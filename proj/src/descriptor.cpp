#include "evlo/descriptor.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "evlo/error.hpp"
#include "evlo/kdtree.hpp"

namespace evlo {

CanonicalFrame canonical_frame(std::span<const Vec3> points) {
  CanonicalFrame f;
  if (points.empty()) return f;
  for (const auto& p : points) f.centroid += p;
  f.centroid /= static_cast<double>(points.size());

  Mat3 cov = Mat3::Zero();
  for (const auto& p : points) {
    const Vec3 d = p - f.centroid;
    cov += d * d.transpose();
    f.radius = std::max(f.radius, d.norm());
  }
  cov /= static_cast<double>(points.size());

  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  for (int c = 0; c < 3; ++c) f.axes.col(c) = eig.eigenvectors().col(2 - c);

  for (int c = 0; c < 3; ++c) {
    double m3 = 0.0;
    for (const auto& p : points) {
      const double u = f.axes.col(c).dot(p - f.centroid);
      m3 += u * u * u;
    }
    if (m3 < 0) f.axes.col(c) = -f.axes.col(c);
  }
  return f;
}

FeatureMatrix compute_descriptors(const PointCloud& cloud, int k) {
  if (k < 4) {
    throw Error(ErrorCode::kInvalidArgument,
                "descriptor neighbourhood k must be >= 4, got " +
                    std::to_string(k));
  }
  const std::size_t n = cloud.size();
  if (n <= static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::kTooFewPoints,
                "descriptors need more than k=" + std::to_string(k) +
                    " points, cloud has " + std::to_string(n));
  }
  const CanonicalFrame frame = canonical_frame(cloud.points);
  if (!(frame.radius > 0)) {
    throw Error(ErrorCode::kDegenerateGeometry, "all points coincide");
  }
  const double r = frame.radius;

  std::vector<Vec3> local(n);
  double zmin = INFINITY, zmax = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    local[i] = frame.axes.transpose() * (cloud.points[i] - frame.centroid);
    zmin = std::min(zmin, local[i].z());
    zmax = std::max(zmax, local[i].z());
  }
  const double zext = zmax - zmin;

  const KdTree tree(cloud.points);
  FeatureMatrix f = FeatureMatrix::Zero(static_cast<Eigen::Index>(n),
                                        kDescriptorDim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const auto nn = tree.knn(cloud.points[i], static_cast<std::size_t>(k), i);

    Vec3 nb_mean = Vec3::Zero();
    double spacing = 0.0;
    for (const auto& nb : nn) {
      nb_mean += local[nb.index];
      spacing += std::sqrt(nb.squared_distance);
    }
    nb_mean /= static_cast<double>(k);
    spacing /= static_cast<double>(k);

    // Covariance of the point together with its neighbours.
    Vec3 mu = (nb_mean * k + local[i]) / static_cast<double>(k + 1);
    Mat3 cov = (local[i] - mu) * (local[i] - mu).transpose();
    for (const auto& nb : nn) {
      const Vec3 d = local[nb.index] - mu;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(k + 1);
    const Vec3 ev_asc =
        Eigen::SelfAdjointEigenSolver<Mat3>(cov, Eigen::EigenvaluesOnly)
            .eigenvalues()
            .cwiseMax(0.0);
    const Vec3 ev(ev_asc[2], ev_asc[1], ev_asc[0]);
    const double sum = ev.sum();

    const Vec3& q = local[i];
    const double rho = std::hypot(q.x(), q.y());
    const Vec3 radial = rho > 0 ? Vec3(q.x() / rho, q.y() / rho, 0.0)
                                : Vec3::UnitX();
    const Vec3 tangential = Vec3::UnitZ().cross(radial);
    const Vec3 offset = nb_mean - q;
    f(row, slot::kPosition) = rho / r;
    f(row, slot::kPosition + 1) = q.z() / r;
    f(row, slot::kPosition + 2) = q.norm() / r;
    f(row, slot::kNeighborOffset) = offset.dot(radial) / r;
    f(row, slot::kNeighborOffset + 1) = offset.dot(tangential) / r;
    f(row, slot::kNeighborOffset + 2) = offset.z() / r;
    if (sum > 0) {
      f.block<1, 3>(row, slot::kEigenvalues) = (ev / sum).transpose();
      f(row, slot::kLinearity) = (ev[0] - ev[1]) / ev[0];
      f(row, slot::kPlanarity) = (ev[1] - ev[2]) / ev[0];
      f(row, slot::kScattering) = ev[2] / ev[0];
    } else {
      f.block<1, 3>(row, slot::kEigenvalues).setConstant(1.0 / 3.0);
    }
    f(row, slot::kHeight) = zext > 0 ? (local[i].z() - zmin) / zext : 0.0;
    f(row, slot::kNeighborSpacing) = spacing / r;
    f.row(row).normalize();
  }
  return f;
}

CostMatrix matching_cost(const FeatureMatrix& src, const FeatureMatrix& tgt,
                         double temperature) {
  if (src.cols() != tgt.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "descriptor widths differ: " + std::to_string(src.cols()) +
                    " vs " + std::to_string(tgt.cols()));
  }
  if (!(temperature > 0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be positive");
  }
  CostMatrix c = (src * tgt.transpose()) / temperature;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    const double top = c.row(i).maxCoeff();
    const double lse = top + std::log((c.row(i).array() - top).exp().sum());
    c.row(i) = (lse - c.row(i).array()).cwiseMax(0.0);
  }
  return c;
}

}  // namespace evlo
