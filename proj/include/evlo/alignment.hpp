#pragma once

#include <span>
#include <vector>

#include "evlo/core_types.hpp"
#include "evlo/descriptor.hpp"
#include "evlo/pot.hpp"

namespace evlo {

// Minimizes sum w_i |R y_i + t - x_i|^2. Rows with weight <= 1e-12 are
// dropped. Throws TooFewPoints with fewer than 3 weighted rows,
// DegenerateGeometry when the weighted source is collinear within 1e-9,
// InvalidArgument on negative weights, DimensionMismatch on length mismatch.
Pose weighted_procrustes(std::span<const Vec3> source,
                         std::span<const Vec3> targets,
                         std::span<const double> weights);
inline Pose weighted_procrustes(const PointCloud& source,
                                const PointCloud& targets,
                                std::span<const double> weights) {
  return weighted_procrustes(source.points, targets.points, weights);
}

struct RegistrationOptions {
  PotConfig pot;
  int descriptor_k = kDefaultNeighbors;
  double temperature = kDefaultTemperature;
};

struct StageTimings {
  double descriptors_ms = 0.0;
  double cost_ms = 0.0;
  double transport_ms = 0.0;
  double procrustes_ms = 0.0;
};

struct RegistrationResult {
  Pose pose;                     // maps source points onto the target
  double matched_fraction = 0.0; // rows with weight >= 1e-12
  double mean_residual = 0.0;    // weighted mean |R y + t - virtual target|
  bool log_domain = false;
  StageTimings timings;
};

// descriptors -> matching cost -> partial transport -> projection ->
// weighted Procrustes.
RegistrationResult register_pair(const PointCloud& source,
                                 const PointCloud& target,
                                 const RegistrationOptions& options = {});

enum class PointNorm { kL1, kL2 };

// (1/N) sum |T_gt y_i - T y_i|
double pose_loss(const PointCloud& source, const Pose& gt, const Pose& pred,
                 PointNorm norm = PointNorm::kL1);
// (1/N) sum |virtual_i - T y_i|
double aux_loss(const PointCloud& virtual_targets, const PointCloud& source,
                const Pose& pred, PointNorm norm = PointNorm::kL1);

inline constexpr double kDefaultLambdaAux = 0.05;

// pose_loss + lambda_aux * aux_loss
double odometry_loss(const PointCloud& source, const PointCloud& virtual_targets,
                     const Pose& gt, const Pose& pred,
                     double lambda_aux = kDefaultLambdaAux,
                     PointNorm norm = PointNorm::kL1);

}  // namespace evlo
