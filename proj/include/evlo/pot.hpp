#pragma once

#include <Eigen/Core>
#include <vector>

#include "evlo/core_types.hpp"
#include "evlo/descriptor.hpp"

namespace evlo {

enum class PotScaling {
  // Row cap, column cap and mass rescale with Dykstra corrections on the two
  // inequality projections; converges to the entropic partial-OT optimum.
  kDykstra,
  // The bare alternating row cap / column cap / mass rescale loop applied to
  // the unscaled kernel exp(-C / lambda).
  kAlternating,
};

struct PotConfig {
  double mass = 0.1;         // m
  int iterations = 5;        // xi
  double regularizer = 0.02;  // lambda
  PotScaling scaling = PotScaling::kDykstra;
  // Switch to log-domain scaling when some exp(-C/lambda) < 1e-300.
  bool allow_log_domain = true;
  // Force the log-domain path regardless of the kernel range.
  bool force_log_domain = false;
  // Stop once both marginal violations fall below 1e-10.
  bool early_exit = false;

  // Throws InvalidArgument unless 0 < mass <= 1, iterations >= 1 and
  // regularizer >= 1e-6.
  void validate() const;
};

struct TransportPlan {
  Eigen::MatrixXd matrix;
  double mass = 0.0;
  int iterations_run = 0;
  bool log_domain = false;

  Eigen::VectorXd row_sums() const { return matrix.rowwise().sum(); }
  Eigen::VectorXd col_sums() const { return matrix.colwise().sum().transpose(); }
};

// Uniform marginals a = b = 1/N.
TransportPlan solve_pot(const CostMatrix& cost, const PotConfig& cfg = {});
// Throws InvalidArgument when m exceeds either marginal total.
TransportPlan solve_pot(const CostMatrix& cost, const PotConfig& cfg,
                        const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// max(M1 - a) and max(M^T 1 - b), clipped below at 0.
double row_violation(const TransportPlan& plan, const Eigen::VectorXd& a);
double col_violation(const TransportPlan& plan, const Eigen::VectorXd& b);

// <M, C> + lambda * sum M log M, with 0 log 0 = 0.
double transport_objective(const TransportPlan& plan, const CostMatrix& cost,
                           double lambda);
double transport_cost(const TransportPlan& plan, const CostMatrix& cost);

inline constexpr double kDegenerateRowWeight = 1e-12;

struct Correspondences {
  PointCloud virtual_targets;       // zero rows where degenerate
  std::vector<double> row_weights;  // sum_j M_ij
  std::vector<bool> degenerate;     // row weight below kDegenerateRowWeight
  std::size_t valid_count() const;
};

// Row i maps to the M-weighted barycentre of the target points.
Correspondences project_correspondences(const TransportPlan& plan,
                                        const PointCloud& target);

}  // namespace evlo
