#pragma once

#include <Eigen/Core>
#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "evlo/core_types.hpp"

namespace evlo {

// Normal-Inverse-Gamma hyper-parameters over (mu, sigma^2).
struct NIGParams {
  double gamma = 0.0;
  double nu = 1.0;
  double alpha = 2.0;
  double beta = 1.0;

  // nu > 0, beta > 0, alpha > 1; the uncertainty moments below need alpha > 1.
  bool is_valid() const;

  double epistemic() const { return beta / (nu * (alpha - 1.0)); }  // Var[mu]
  double aleatoric() const { return beta / (alpha - 1.0); }         // E[sigma^2]
  double mean() const { return gamma; }                             // E[mu]
  double confidence() const { return 1.0 - epistemic(); }
};

// Partial derivatives with respect to (gamma, nu, alpha, beta).
struct NIGGradient {
  double gamma = 0.0, nu = 0.0, alpha = 0.0, beta = 0.0;
};

// Axis order: Rx, Ry, Rz (radians), tx, ty, tz (meters).
struct EvidentialPose {
  std::array<NIGParams, 6> per_axis;
};

struct UncertaintySummary {
  Vec6 epistemic, aleatoric, mean, confidence;
};

UncertaintySummary summarize(const EvidentialPose& ep);

inline constexpr double kDefaultLambdaR = 0.2;

// Joint density p(mu, sigma^2 | gamma, nu, alpha, beta); sigma2 > 0.
double nig_density(double mu, double sigma2, const NIGParams& p);

// The losses accept any nu, beta > 0 and alpha > 0, so the alpha = 1 limit
// is still evaluable.
double nll_loss(double target, const NIGParams& p);
double reg_loss(double target, const NIGParams& p);
NIGGradient nll_gradient(double target, const NIGParams& p);
// Subgradient; the |target - gamma| kink takes derivative 0 at equality.
NIGGradient reg_gradient(double target, const NIGParams& p);
// d nll / d target.
double nll_target_derivative(double target, const NIGParams& p);

// Mean over the six axes of nll + lambda_r * reg.
double evidence_loss(const Vec6& targets, const EvidentialPose& ep,
                     double lambda_r = kDefaultLambdaR);

struct EvidentialSample {
  Eigen::VectorXd features;
  double target = 0.0;
};

struct FitOptions {
  int epochs = 2000;
  double step = 1e-2;
  double lambda_r = kDefaultLambdaR;
  // Each epoch halves the step until the full-batch loss does not increase,
  // at most this many times; the halved step carries over.
  int max_backtracks = 30;
};

// Linear head over a feature vector mapping to NIG parameters through
//   gamma = z0, nu = softplus(z1), alpha = 1 + softplus(z2),
//   beta = softplus(z3), with z = W [features; 1].
// Targets are standardized internally (target_offset, target_scale); the
// outputs are reported in the original target units.
class EvidentialHead {
 public:
  static constexpr const char* kParameterization = "softplus-v1";

  EvidentialHead() = default;
  explicit EvidentialHead(int num_features);

  int num_features() const { return static_cast<int>(weights_.cols()) - 1; }

  NIGParams predict(const Eigen::VectorXd& features) const;

  // Mean evidential loss over the samples, in standardized target units.
  double loss(std::span<const EvidentialSample> samples,
              double lambda_r = kDefaultLambdaR) const;

  const Eigen::Matrix<double, 4, Eigen::Dynamic>& weights() const {
    return weights_;
  }
  double target_offset() const { return target_offset_; }
  double target_scale() const { return target_scale_; }
  const std::vector<double>& loss_history() const { return loss_history_; }

  void write(std::ostream& out) const;
  static EvidentialHead read(std::istream& in);

  friend EvidentialHead fit_evidential(std::span<const EvidentialSample>,
                                       const FitOptions&);

 private:
  NIGParams predict_standardized(const Eigen::VectorXd& features) const;

  Eigen::Matrix<double, 4, Eigen::Dynamic> weights_;
  double target_offset_ = 0.0;
  double target_scale_ = 1.0;
  std::vector<double> loss_history_;
};

// Full-batch gradient descent on the evidential loss, over features whitened
// by their uncentered second moment. Requires >= 32 samples with
// equal-length finite features; throws NonFiniteLoss if the loss ever becomes
// non-finite.
EvidentialHead fit_evidential(std::span<const EvidentialSample> samples,
                              const FitOptions& options = {});

// Gaussian radial-basis features over a 1D input.
Eigen::VectorXd rbf_features(double x, std::span<const double> centers,
                             double width);

// Six heads, one per pose axis, sharing one feature vector.
struct EvidentialPoseModel {
  std::array<EvidentialHead, 6> heads;

  EvidentialPose predict(const Eigen::VectorXd& features) const;
  void write(std::ostream& out) const;
  static EvidentialPoseModel read(std::istream& in);
};

}  // namespace evlo
