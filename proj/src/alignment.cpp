#include "evlo/alignment.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <chrono>
#include <cmath>

#include "evlo/error.hpp"

namespace evlo {

namespace {

constexpr double kCollinearTolerance = 1e-9;

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - since)
      .count();
}

double norm_of(const Vec3& d, PointNorm norm) {
  return norm == PointNorm::kL1 ? d.cwiseAbs().sum() : d.norm();
}

}  // namespace

Pose weighted_procrustes(std::span<const Vec3> source,
                         std::span<const Vec3> targets,
                         std::span<const double> weights) {
  if (source.size() != targets.size() || source.size() != weights.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "source, targets and weights must have equal length");
  }
  double total = 0.0;
  std::size_t used = 0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "weights must be finite and nonnegative");
    }
    if (w > kDegenerateRowWeight) {
      total += w;
      ++used;
    }
  }
  if (used < 3) {
    throw Error(ErrorCode::kTooFewPoints,
                "Procrustes needs 3 weighted rows, got " + std::to_string(used));
  }

  Vec3 ys = Vec3::Zero(), xs = Vec3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (weights[i] <= kDegenerateRowWeight) continue;
    ys += weights[i] * source[i];
    xs += weights[i] * targets[i];
  }
  const Vec3 y_bar = ys / total, x_bar = xs / total;

  Mat3 cov = Mat3::Zero(), h = Mat3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    const double w = weights[i];
    if (w <= kDegenerateRowWeight) continue;
    const Vec3 dy = source[i] - y_bar;
    cov += (w / total) * dy * dy.transpose();
    h += (w / total) * dy * (targets[i] - x_bar).transpose();
  }

  const Vec3 ev = Eigen::SelfAdjointEigenSolver<Mat3>(cov, Eigen::EigenvaluesOnly)
                      .eigenvalues()
                      .cwiseMax(0.0);
  if (!(ev[2] > 0.0) ||
      std::sqrt(ev[1]) <= kCollinearTolerance * std::sqrt(ev[2])) {
    throw Error(ErrorCode::kDegenerateGeometry,
                "weighted source points are collinear; rotation is not unique");
  }

  const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0 ? -1.0 : 1.0;

  Pose p;
  p.rotation = v * d * u.transpose();
  p.translation = x_bar - p.rotation * y_bar;
  return p;
}

RegistrationResult register_pair(const PointCloud& source,
                                 const PointCloud& target,
                                 const RegistrationOptions& options) {
  source.validate();
  target.validate();
  RegistrationResult result;
  auto t0 = std::chrono::steady_clock::now();
  const FeatureMatrix fs = compute_descriptors(source, options.descriptor_k);
  const FeatureMatrix ft = compute_descriptors(target, options.descriptor_k);
  result.timings.descriptors_ms = elapsed_ms(t0);

  t0 = std::chrono::steady_clock::now();
  const CostMatrix cost = matching_cost(fs, ft, options.temperature);
  result.timings.cost_ms = elapsed_ms(t0);

  t0 = std::chrono::steady_clock::now();
  const TransportPlan plan = solve_pot(cost, options.pot);
  result.timings.transport_ms = elapsed_ms(t0);
  result.log_domain = plan.log_domain;

  t0 = std::chrono::steady_clock::now();
  const Correspondences corr = project_correspondences(plan, target);
  std::vector<double> weights = corr.row_weights;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (corr.degenerate[i]) weights[i] = 0.0;
  }
  result.pose =
      weighted_procrustes(source.points, corr.virtual_targets.points, weights);
  result.timings.procrustes_ms = elapsed_ms(t0);

  double wsum = 0.0, rsum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (corr.degenerate[i]) continue;
    wsum += weights[i];
    rsum += weights[i] *
            (result.pose * source.points[i] - corr.virtual_targets.points[i]).norm();
  }
  result.matched_fraction = static_cast<double>(corr.valid_count()) /
                            static_cast<double>(source.size());
  result.mean_residual = wsum > 0.0 ? rsum / wsum : 0.0;
  return result;
}

double pose_loss(const PointCloud& source, const Pose& gt, const Pose& pred,
                 PointNorm norm) {
  if (source.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "pose_loss needs a non-empty source");
  }
  double sum = 0.0;
  for (const auto& y : source.points) sum += norm_of(gt * y - pred * y, norm);
  return sum / static_cast<double>(source.size());
}

double aux_loss(const PointCloud& virtual_targets, const PointCloud& source,
                const Pose& pred, PointNorm norm) {
  if (virtual_targets.size() != source.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "virtual targets and source differ in length");
  }
  if (source.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "aux_loss needs a non-empty source");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    sum += norm_of(virtual_targets.points[i] - pred * source.points[i], norm);
  }
  return sum / static_cast<double>(source.size());
}

double odometry_loss(const PointCloud& source, const PointCloud& virtual_targets,
                     const Pose& gt, const Pose& pred, double lambda_aux,
                     PointNorm norm) {
  const double lp = pose_loss(source, gt, pred, norm);
  if (lambda_aux == 0.0) return lp;
  return lp + lambda_aux * aux_loss(virtual_targets, source, pred, norm);
}

}  // namespace evlo
