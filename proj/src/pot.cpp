#include "evlo/pot.hpp"

#include <cmath>
#include <limits>

#include "evlo/error.hpp"

namespace evlo {

void PotConfig::validate() const {
  if (!(mass > 0.0 && mass <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "POT mass must lie in (0, 1], got " + std::to_string(mass));
  }
  if (iterations < 1) {
    throw Error(ErrorCode::kInvalidArgument, "POT iterations must be >= 1");
  }
  if (!(regularizer >= 1e-6) || !std::isfinite(regularizer)) {
    throw Error(ErrorCode::kInvalidArgument,
                "POT regularizer must be >= 1e-6, got " +
                    std::to_string(regularizer));
  }
}

namespace {

constexpr double kLogDomainThreshold = 1e-300;
constexpr double kEarlyExitTolerance = 1e-10;

bool converged(const Eigen::MatrixXd& k, const Eigen::VectorXd& a,
               const Eigen::VectorXd& b) {
  const double rv = (k.rowwise().sum() - a).maxCoeff();
  const double cv = (k.colwise().sum().transpose() - b).maxCoeff();
  return rv < kEarlyExitTolerance && cv < kEarlyExitTolerance;
}

template <typename Derived>
double log_sum_exp(const Eigen::ArrayBase<Derived>& v) {
  const double top = v.maxCoeff();
  if (top == -std::numeric_limits<double>::infinity()) return top;
  // Terms below exp(-745) vanish in double precision; clamping keeps the
  // vectorized exp on its fast path.
  return top + std::log((v - top).max(-745.0).exp().sum());
}

TransportPlan solve_plain(const Eigen::MatrixXd& kernel, const PotConfig& cfg,
                          const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const bool dykstra = cfg.scaling == PotScaling::kDykstra;
  Eigen::MatrixXd k = kernel;
  if (dykstra) k *= cfg.mass / k.sum();
  Eigen::VectorXd q_row = Eigen::VectorXd::Ones(k.rows());
  Eigen::VectorXd q_col = Eigen::VectorXd::Ones(k.cols());

  TransportPlan plan;
  for (int it = 0; it < cfg.iterations; ++it) {
    k = q_row.asDiagonal() * k;
    const Eigen::VectorXd rs = k.rowwise().sum();
    Eigen::VectorXd s(k.rows());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      s[i] = rs[i] > 0 ? std::min(a[i] / rs[i], 1.0) : 1.0;
    }
    k = s.asDiagonal() * k;
    if (dykstra) q_row = s.cwiseInverse();

    k = k * q_col.asDiagonal();
    const Eigen::VectorXd cs = k.colwise().sum().transpose();
    Eigen::VectorXd t(k.cols());
    for (Eigen::Index j = 0; j < t.size(); ++j) {
      t[j] = cs[j] > 0 ? std::min(b[j] / cs[j], 1.0) : 1.0;
    }
    k = k * t.asDiagonal();
    if (dykstra) q_col = t.cwiseInverse();

    k *= cfg.mass / k.sum();
    plan.iterations_run = it + 1;
    if (cfg.early_exit && converged(k, a, b)) break;
  }
  plan.matrix = std::move(k);
  return plan;
}

TransportPlan solve_log(const Eigen::MatrixXd& log_kernel, const PotConfig& cfg,
                        const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  using RowArray =
      Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const bool dykstra = cfg.scaling == PotScaling::kDykstra;
  const Eigen::Index n = log_kernel.rows(), p = log_kernel.cols();
  RowArray lk = log_kernel.array();
  if (dykstra) lk += std::log(cfg.mass) - log_sum_exp(lk);
  Eigen::ArrayXd lq_row = Eigen::ArrayXd::Zero(n);
  Eigen::ArrayXd lq_col = Eigen::ArrayXd::Zero(p);
  const Eigen::ArrayXd la = a.array().log();
  const Eigen::ArrayXd lb = b.array().log();
  Eigen::ArrayXd col_max(p), col_sum(p);

  TransportPlan plan;
  plan.log_domain = true;
  for (int it = 0; it < cfg.iterations; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      auto row = lk.row(i);
      row += lq_row[i];
      const double lrs = log_sum_exp(row);
      const double ls = std::isfinite(lrs) ? std::min(la[i] - lrs, 0.0) : 0.0;
      row += ls;
      if (dykstra) lq_row[i] = -ls;
    }
    lk.rowwise() += lq_col.transpose();
    col_max = lk.colwise().maxCoeff().transpose();
    col_sum.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      col_sum += (lk.row(i).transpose() - col_max).max(-745.0).exp();
    }
    // Column log-masses after the cap give the total without another pass.
    Eigen::ArrayXd capped(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      const double lcs = col_max[j] + std::log(col_sum[j]);
      const double lt = std::isfinite(lcs) ? std::min(lb[j] - lcs, 0.0) : 0.0;
      col_max[j] = lt;
      capped[j] = lcs + lt;
      if (dykstra) lq_col[j] = -lt;
    }
    col_max += std::log(cfg.mass) - log_sum_exp(capped);
    lk.rowwise() += col_max.transpose();
    plan.iterations_run = it + 1;
    if (cfg.early_exit && converged(lk.exp().matrix(), a, b)) break;
  }
  plan.matrix = lk.exp().matrix();
  // Restore exact total mass after leaving the log domain.
  plan.matrix *= cfg.mass / plan.matrix.sum();
  return plan;
}

}  // namespace

TransportPlan solve_pot(const CostMatrix& cost, const PotConfig& cfg) {
  const Eigen::VectorXd a =
      Eigen::VectorXd::Constant(cost.rows(), 1.0 / static_cast<double>(cost.rows()));
  const Eigen::VectorXd b =
      Eigen::VectorXd::Constant(cost.cols(), 1.0 / static_cast<double>(cost.cols()));
  return solve_pot(cost, cfg, a, b);
}

TransportPlan solve_pot(const CostMatrix& cost, const PotConfig& cfg,
                        const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  cfg.validate();
  if (cost.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty cost matrix");
  }
  if (a.size() != cost.rows() || b.size() != cost.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "marginals do not match the cost matrix shape");
  }
  if (!cost.allFinite() || cost.minCoeff() < 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "cost entries must be finite and nonnegative");
  }
  if ((a.array() <= 0).any() || (b.array() <= 0).any()) {
    throw Error(ErrorCode::kInvalidArgument, "marginals must be positive");
  }
  if (cfg.mass > std::min(a.sum(), b.sum()) * (1.0 + 1e-12)) {
    throw Error(ErrorCode::kInvalidArgument,
                "mass exceeds the smaller marginal total");
  }

  const Eigen::MatrixXd log_kernel = -cost / cfg.regularizer;
  const bool needs_log = log_kernel.minCoeff() < std::log(kLogDomainThreshold);

  TransportPlan plan;
  if (cfg.force_log_domain || (needs_log && cfg.allow_log_domain)) {
    plan = solve_log(log_kernel, cfg, a, b);
  } else {
    // Scalar exp so that entries below the double range really underflow.
    const Eigen::MatrixXd kernel = log_kernel.unaryExpr([](double v) { return std::exp(v); });
    if (!(kernel.sum() > 0.0)) {
      throw Error(ErrorCode::kNumericalUnderflow,
                  "every exp(-C/lambda) entry underflows; min cost " +
                      std::to_string(cost.minCoeff()) + ", lambda " +
                      std::to_string(cfg.regularizer) +
                      ". Rescale the cost or raise lambda");
    }
    plan = solve_plain(kernel, cfg, a, b);
  }
  if (!plan.matrix.allFinite()) {
    throw Error(ErrorCode::kNumericalUnderflow,
                "scaling produced non-finite entries; raise lambda");
  }
  plan.mass = cfg.mass;
  return plan;
}

double row_violation(const TransportPlan& plan, const Eigen::VectorXd& a) {
  return std::max(0.0, (plan.row_sums() - a).maxCoeff());
}

double col_violation(const TransportPlan& plan, const Eigen::VectorXd& b) {
  return std::max(0.0, (plan.col_sums() - b).maxCoeff());
}

double transport_cost(const TransportPlan& plan, const CostMatrix& cost) {
  if (plan.matrix.rows() != cost.rows() || plan.matrix.cols() != cost.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "plan and cost shapes differ");
  }
  return plan.matrix.cwiseProduct(cost).sum();
}

double transport_objective(const TransportPlan& plan, const CostMatrix& cost,
                           double lambda) {
  double entropy = 0.0;
  for (Eigen::Index j = 0; j < plan.matrix.cols(); ++j) {
    for (Eigen::Index i = 0; i < plan.matrix.rows(); ++i) {
      const double v = plan.matrix(i, j);
      if (v > 0.0) entropy += v * std::log(v);
    }
  }
  return transport_cost(plan, cost) + lambda * entropy;
}

std::size_t Correspondences::valid_count() const {
  std::size_t n = 0;
  for (bool d : degenerate) n += d ? 0 : 1;
  return n;
}

Correspondences project_correspondences(const TransportPlan& plan,
                                        const PointCloud& target) {
  const Eigen::Index rows = plan.matrix.rows();
  if (static_cast<std::size_t>(plan.matrix.cols()) != target.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "plan has " + std::to_string(plan.matrix.cols()) +
                    " columns but target has " + std::to_string(target.size()) +
                    " points");
  }
  Correspondences out;
  out.virtual_targets.points.assign(static_cast<std::size_t>(rows), Vec3::Zero());
  out.row_weights.resize(static_cast<std::size_t>(rows));
  out.degenerate.resize(static_cast<std::size_t>(rows));
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    const double w = plan.matrix.row(i).sum();
    out.row_weights[r] = w;
    out.degenerate[r] = w < kDegenerateRowWeight;
    if (out.degenerate[r]) continue;
    // Normalizing each entry first keeps single-entry rows exact.
    Vec3 acc = Vec3::Zero();
    for (Eigen::Index j = 0; j < plan.matrix.cols(); ++j) {
      acc += (plan.matrix(i, j) / w) * target.points[static_cast<std::size_t>(j)];
    }
    out.virtual_targets.points[r] = acc;
  }
  return out;
}

}  // namespace evlo
