#include "evlo/evidential.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "evlo/error.hpp"
#include "evlo/text_io.hpp"

namespace evlo {

namespace {

double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double omega(const NIGParams& p) { return 2.0 * p.beta * (1.0 + p.nu); }

void require_loss_domain(const NIGParams& p) {
  if (!(p.nu > 0 && p.beta > 0 && p.alpha > 0) || !std::isfinite(p.gamma)) {
    throw Error(ErrorCode::kInvalidArgument,
                "NIG loss needs nu > 0, alpha > 0, beta > 0");
  }
}

}  // namespace

bool NIGParams::is_valid() const {
  return std::isfinite(gamma) && nu > 0 && alpha > 1 && beta > 0 &&
         std::isfinite(nu) && std::isfinite(alpha) && std::isfinite(beta);
}

UncertaintySummary summarize(const EvidentialPose& ep) {
  UncertaintySummary s;
  for (int k = 0; k < 6; ++k) {
    const NIGParams& p = ep.per_axis[k];
    if (!p.is_valid()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "axis " + std::to_string(k) + " violates NIG invariants");
    }
    s.epistemic[k] = p.epistemic();
    s.aleatoric[k] = p.aleatoric();
    s.mean[k] = p.mean();
    s.confidence[k] = p.confidence();
  }
  return s;
}

double nig_density(double mu, double sigma2, const NIGParams& p) {
  if (!(sigma2 > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "sigma2 must be positive");
  }
  const double d = p.gamma - mu;
  const double log_p = p.alpha * std::log(p.beta) + 0.5 * std::log(p.nu) -
                       std::lgamma(p.alpha) -
                       0.5 * std::log(2.0 * std::numbers::pi * sigma2) -
                       (p.alpha + 1.0) * std::log(sigma2) -
                       (2.0 * p.beta + p.nu * d * d) / (2.0 * sigma2);
  return std::exp(log_p);
}

double nll_loss(double target, const NIGParams& p) {
  require_loss_domain(p);
  const double e = target - p.gamma;
  const double om = omega(p);
  return 0.5 * std::log(std::numbers::pi / p.nu) - p.alpha * std::log(om) +
         (p.alpha + 0.5) * std::log(e * e * p.nu + om) +
         std::lgamma(p.alpha) - std::lgamma(p.alpha + 0.5);
}

double reg_loss(double target, const NIGParams& p) {
  return std::abs(target - p.gamma) * (2.0 * p.alpha + p.nu);
}

NIGGradient nll_gradient(double target, const NIGParams& p) {
  require_loss_domain(p);
  const double e = target - p.gamma;
  const double om = omega(p);
  const double s = e * e * p.nu + om;
  const double a = p.alpha + 0.5;
  NIGGradient g;
  g.gamma = -a * 2.0 * e * p.nu / s;
  g.nu = -0.5 / p.nu - p.alpha * 2.0 * p.beta / om + a * (e * e + 2.0 * p.beta) / s;
  g.alpha = std::log(s) - std::log(om) + boost::math::digamma(p.alpha) -
            boost::math::digamma(p.alpha + 0.5);
  g.beta = -p.alpha / p.beta + a * 2.0 * (1.0 + p.nu) / s;
  return g;
}

NIGGradient reg_gradient(double target, const NIGParams& p) {
  const double e = target - p.gamma;
  const double sign = e > 0 ? 1.0 : (e < 0 ? -1.0 : 0.0);
  NIGGradient g;
  g.gamma = -sign * (2.0 * p.alpha + p.nu);
  g.nu = std::abs(e);
  g.alpha = 2.0 * std::abs(e);
  g.beta = 0.0;
  return g;
}

double nll_target_derivative(double target, const NIGParams& p) {
  return -nll_gradient(target, p).gamma;
}

double evidence_loss(const Vec6& targets, const EvidentialPose& ep,
                     double lambda_r) {
  double sum = 0.0;
  for (int k = 0; k < 6; ++k) {
    sum += nll_loss(targets[k], ep.per_axis[k]) +
           lambda_r * reg_loss(targets[k], ep.per_axis[k]);
  }
  return sum / 6.0;
}

Eigen::VectorXd rbf_features(double x, std::span<const double> centers,
                             double width) {
  Eigen::VectorXd f(centers.size());
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double d = (x - centers[i]) / width;
    f[static_cast<Eigen::Index>(i)] = std::exp(-0.5 * d * d);
  }
  return f;
}

EvidentialHead::EvidentialHead(int num_features)
    : weights_(Eigen::Matrix<double, 4, Eigen::Dynamic>::Zero(4, num_features + 1)) {}

NIGParams EvidentialHead::predict_standardized(
    const Eigen::VectorXd& features) const {
  if (features.size() != num_features()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "head expects " + std::to_string(num_features()) +
                    " features, got " + std::to_string(features.size()));
  }
  const Eigen::Vector4d z =
      weights_.leftCols(num_features()) * features + weights_.rightCols<1>();
  return {z[0], softplus(z[1]), 1.0 + softplus(z[2]), softplus(z[3])};
}

NIGParams EvidentialHead::predict(const Eigen::VectorXd& features) const {
  NIGParams p = predict_standardized(features);
  p.gamma = target_offset_ + target_scale_ * p.gamma;
  p.beta *= target_scale_ * target_scale_;
  return p;
}

double EvidentialHead::loss(std::span<const EvidentialSample> samples,
                            double lambda_r) const {
  double sum = 0.0;
  for (const auto& s : samples) {
    const NIGParams p = predict_standardized(s.features);
    const double t = (s.target - target_offset_) / target_scale_;
    sum += nll_loss(t, p) + lambda_r * reg_loss(t, p);
  }
  return sum / static_cast<double>(samples.size());
}

namespace {

// Feature-covariance eigenvalues are floored at this fraction of the largest.
constexpr double kWhitenFloor = 1e-10;

// Gradient of the mean loss with respect to the head weights.
Eigen::Matrix<double, 4, Eigen::Dynamic> loss_gradient(
    const Eigen::Matrix<double, 4, Eigen::Dynamic>& w,
    std::span<const EvidentialSample> samples, std::span<const double> targets,
    double lambda_r) {
  const Eigen::Index k = w.cols() - 1;
  Eigen::Matrix<double, 4, Eigen::Dynamic> grad =
      Eigen::Matrix<double, 4, Eigen::Dynamic>::Zero(4, w.cols());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Eigen::VectorXd& f = samples[i].features;
    const Eigen::Vector4d z = w.leftCols(k) * f + w.rightCols<1>();
    const NIGParams p{z[0], softplus(z[1]), 1.0 + softplus(z[2]),
                      softplus(z[3])};
    const NIGGradient gn = nll_gradient(targets[i], p);
    const NIGGradient gr = reg_gradient(targets[i], p);
    const Eigen::Vector4d dz(gn.gamma + lambda_r * gr.gamma,
                             (gn.nu + lambda_r * gr.nu) * sigmoid(z[1]),
                             (gn.alpha + lambda_r * gr.alpha) * sigmoid(z[2]),
                             (gn.beta + lambda_r * gr.beta) * sigmoid(z[3]));
    grad.leftCols(k) += dz * f.transpose();
    grad.rightCols<1>() += dz;
  }
  return grad / static_cast<double>(samples.size());
}

}  // namespace

EvidentialHead fit_evidential(std::span<const EvidentialSample> samples,
                              const FitOptions& options) {
  if (samples.size() < 32) {
    throw Error(ErrorCode::kInvalidArgument,
                "fit_evidential needs at least 32 samples, got " +
                    std::to_string(samples.size()));
  }
  const Eigen::Index k = samples.front().features.size();
  double mean = 0.0;
  for (const auto& s : samples) {
    if (s.features.size() != k || !s.features.allFinite() ||
        !std::isfinite(s.target)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "samples need equal-length finite features and targets");
    }
    mean += s.target;
  }
  mean /= static_cast<double>(samples.size());
  double var = 0.0;
  for (const auto& s : samples) var += (s.target - mean) * (s.target - mean);
  var /= static_cast<double>(samples.size());

  EvidentialHead head(static_cast<int>(k));
  head.target_offset_ = mean;
  head.target_scale_ = var > 0 ? std::sqrt(var) : 1.0;

  std::vector<double> targets;
  targets.reserve(samples.size());
  for (const auto& s : samples) {
    targets.push_back((s.target - head.target_offset_) / head.target_scale_);
  }

  // Descent runs on whitened features f' = T f, with T from the raw second
  // moment so that f = 0 still maps to the bias alone; the fitted weights
  // are mapped back to the raw features at the end.
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(k, k);
  for (const auto& s : samples) cov += s.features * s.features.transpose();
  cov /= static_cast<double>(samples.size());
  Eigen::MatrixXd whiten = Eigen::MatrixXd::Identity(k, k);
  if (k > 0) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const double top = eig.eigenvalues().maxCoeff();
    if (top > 0.0) {
      const Eigen::VectorXd d =
          eig.eigenvalues().cwiseMax(kWhitenFloor * top).cwiseSqrt().cwiseInverse();
      whiten = d.asDiagonal() * eig.eigenvectors().transpose();
    }
  }
  std::vector<EvidentialSample> white;
  white.reserve(samples.size());
  for (const auto& s : samples) {
    white.push_back({whiten * s.features, s.target});
  }
  const EvidentialHead raw = head;
  const auto to_raw = [&](const EvidentialHead& h) {
    EvidentialHead out = raw;
    out.weights_.leftCols(k) = h.weights_.leftCols(k) * whiten;
    out.weights_.rightCols<1>() = h.weights_.rightCols<1>();
    out.loss_history_ = h.loss_history_;
    return out;
  };

  auto check = [&](double loss, int epoch) {
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::kNonFiniteLoss,
                  "loss became " + std::to_string(loss) + " at epoch " +
                      std::to_string(epoch) + " (step " +
                      std::to_string(options.step) + ")");
    }
  };

  double step = options.step;
  double current = head.loss(white, options.lambda_r);
  check(current, 0);
  head.loss_history_.push_back(current);
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto grad =
        loss_gradient(head.weights_, white, targets, options.lambda_r);
    EvidentialHead trial = head;
    double next = current;
    bool accepted = false;
    for (int b = 0; b <= options.max_backtracks; ++b) {
      trial.weights_ = head.weights_ - step * grad;
      next = trial.loss(white, options.lambda_r);
      if (std::isfinite(next) && next <= current) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // stationary to working precision
    check(next, epoch);
    head.weights_ = trial.weights_;
    current = next;
    head.loss_history_.push_back(current);
  }
  return to_raw(head);
}

void EvidentialHead::write(std::ostream& out) const {
  static constexpr const char* kRows[4] = {"w_gamma", "w_nu", "w_alpha",
                                           "w_beta"};
  out << "evidential_head\n";
  out << "parameterization = " << kParameterization << "\n";
  out << "num_features = " << num_features() << "\n";
  out << "target_offset = " << format_double(target_offset_) << "\n";
  out << "target_scale = " << format_double(target_scale_) << "\n";
  for (int r = 0; r < 4; ++r) {
    out << kRows[r] << " =";
    for (Eigen::Index c = 0; c < weights_.cols(); ++c) {
      out << ' ' << format_double(weights_(r, c));
    }
    out << "\n";
  }
  out << "end\n";
}

EvidentialHead EvidentialHead::read(std::istream& in) {
  std::string line;
  int line_no = 0;
  auto next_line = [&]() -> std::string {
    while (std::getline(in, line)) {
      ++line_no;
      if (!trim(line).empty()) return std::string(trim(line));
    }
    throw Error(ErrorCode::kParseError, "unexpected end of head record");
  };
  if (next_line() != "evidential_head") {
    throw Error(ErrorCode::kParseError,
                "line " + std::to_string(line_no) + ": expected evidential_head");
  }
  auto expect = [&](std::string_view key) -> std::string {
    const std::string l = next_line();
    const auto [k, v] = split_key_value(l, line_no);
    if (k != key) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) +
                                              ": expected key " +
                                              std::string(key));
    }
    return v;
  };
  if (expect("parameterization") != kParameterization) {
    throw Error(ErrorCode::kParseError, "unsupported parameterization");
  }
  const int k = static_cast<int>(parse_long(expect("num_features"), line_no));
  if (k < 0) throw Error(ErrorCode::kParseError, "negative num_features");
  EvidentialHead head(k);
  head.target_offset_ = parse_double(expect("target_offset"), line_no);
  head.target_scale_ = parse_double(expect("target_scale"), line_no);
  static constexpr const char* kRows[4] = {"w_gamma", "w_nu", "w_alpha",
                                           "w_beta"};
  for (int r = 0; r < 4; ++r) {
    const auto values = parse_doubles(expect(kRows[r]), line_no);
    if (static_cast<int>(values.size()) != k + 1) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": expected " +
                      std::to_string(k + 1) + " weights");
    }
    for (int c = 0; c <= k; ++c) head.weights_(r, c) = values[c];
  }
  if (next_line() != "end") {
    throw Error(ErrorCode::kParseError,
                "line " + std::to_string(line_no) + ": expected end");
  }
  return head;
}

EvidentialPose EvidentialPoseModel::predict(
    const Eigen::VectorXd& features) const {
  EvidentialPose ep;
  for (int k = 0; k < 6; ++k) ep.per_axis[k] = heads[k].predict(features);
  return ep;
}

void EvidentialPoseModel::write(std::ostream& out) const {
  for (const auto& h : heads) h.write(out);
}

EvidentialPoseModel EvidentialPoseModel::read(std::istream& in) {
  EvidentialPoseModel m;
  for (auto& h : m.heads) h = EvidentialHead::read(in);
  return m;
}

}  // namespace evlo
