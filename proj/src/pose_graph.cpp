#include "evlo/pose_graph.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string>

#include "evlo/error.hpp"
#include "lie.hpp"
#include "evlo/text_io.hpp"

namespace evlo {

void GateConfig::validate() const {
  if (!(theta_min >= 0.0 && theta_min < theta_max && theta_max <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "gate thresholds need 0 <= theta_min < theta_max <= 1");
  }
  if (odometry_factor < 1 || keyframe_factor < 1) {
    throw Error(ErrorCode::kInvalidArgument, "gate factors must be >= 1");
  }
  if (keyframe_factor % odometry_factor != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "key-frame factor must be a multiple of the odometry factor");
  }
}

GateDecision gate_keyframe(double confidence, const GateConfig& cfg) {
  if (confidence >= cfg.theta_min && confidence <= cfg.theta_max) {
    return GateDecision::kReject;
  }
  return GateDecision::kRefine;
}

double reduce_confidence(const Vec6& confidence) { return confidence.minCoeff(); }

std::size_t PoseGraph::index_of(long frame_id) const {
  auto it = std::lower_bound(
      nodes.begin(), nodes.end(), frame_id,
      [](const GraphNode& n, long id) { return n.frame_id < id; });
  if (it == nodes.end() || it->frame_id != frame_id) {
    throw Error(ErrorCode::kInvalidArgument,
                "no node with frame id " + std::to_string(frame_id));
  }
  return static_cast<std::size_t>(it - nodes.begin());
}

void PoseGraph::validate() const {
  if (nodes.empty()) throw Error(ErrorCode::kInvalidArgument, "graph has no nodes");
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (nodes[i].frame_id <= nodes[i - 1].frame_id) {
      throw Error(ErrorCode::kInvalidArgument, "node frame ids must increase");
    }
  }
  index_of(anchored);
  for (const auto& f : factors) {
    index_of(f.from);
    index_of(f.to);
    if (f.from >= f.to) {
      throw Error(ErrorCode::kInvalidArgument, "factor endpoints need from < to");
    }
    if (!f.information.allFinite() ||
        (f.information - f.information.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
      throw Error(ErrorCode::kInvalidArgument, "information must be symmetric");
    }
    Eigen::LLT<Mat6> llt(f.information);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::kInvalidArgument,
                  "information must be positive definite");
    }
  }
}

std::size_t PoseGraph::keyframe_factor_count() const {
  return static_cast<std::size_t>(
      std::count_if(factors.begin(), factors.end(), [](const GraphFactor& f) {
        return f.kind == FactorKind::kKeyframe;
      }));
}

Vec6 default_sigma_odom() {
  const double r = 0.3 * std::numbers::pi / 180.0;
  Vec6 s;
  s << r, r, r, 0.05, 0.05, 0.05;
  return s;
}

Mat6 information_from_sigma(const Vec6& sigma) {
  if (!((sigma.array() > 0.0).all() && sigma.allFinite())) {
    throw Error(ErrorCode::kInvalidArgument, "sigmas must be positive");
  }
  return sigma.array().square().inverse().matrix().asDiagonal();
}

namespace {

std::size_t span_count(const std::vector<GraphNode>& odometry, const GateConfig& cfg) {
  if (odometry.empty()) return 0;
  return static_cast<std::size_t>(
      (odometry.back().frame_id - odometry.front().frame_id) / cfg.keyframe_factor);
}

}  // namespace

std::vector<GateDecision> gate_spans(const std::vector<Vec6>& confidences,
                                     const GateConfig& cfg) {
  std::vector<GateDecision> out;
  out.reserve(confidences.size());
  for (const auto& c : confidences) {
    out.push_back(gate_keyframe(reduce_confidence(c), cfg));
  }
  return out;
}

PoseGraph build_graph(const std::vector<GraphNode>& odometry,
                      const std::vector<Vec6>& confidences, const GateConfig& cfg,
                      const Vec6& sigma_odom, const Vec6& sigma_key,
                      const std::vector<Pose>* keyframe_measurements) {
  cfg.validate();
  if (odometry.empty()) throw Error(ErrorCode::kInvalidArgument, "no odometry frames");
  for (std::size_t i = 1; i < odometry.size(); ++i) {
    if (odometry[i].frame_id - odometry[i - 1].frame_id != cfg.odometry_factor) {
      throw Error(ErrorCode::kMisalignedInputs,
                  "odometry frame " + std::to_string(odometry[i].frame_id) +
                      " is not spaced by " + std::to_string(cfg.odometry_factor));
    }
  }
  const std::size_t spans = span_count(odometry, cfg);
  if (confidences.size() != spans) {
    throw Error(ErrorCode::kMisalignedInputs,
                "expected " + std::to_string(spans) + " key-frame confidences, got " +
                    std::to_string(confidences.size()));
  }
  if (keyframe_measurements && keyframe_measurements->size() != spans) {
    throw Error(ErrorCode::kMisalignedInputs,
                "expected " + std::to_string(spans) +
                    " key-frame measurements, got " +
                    std::to_string(keyframe_measurements->size()));
  }

  PoseGraph g;
  g.nodes = odometry;
  g.anchored = odometry.front().frame_id;
  const Mat6 info_odom = information_from_sigma(sigma_odom);
  const Mat6 info_key = information_from_sigma(sigma_key);
  for (std::size_t i = 1; i < odometry.size(); ++i) {
    g.factors.push_back({odometry[i - 1].frame_id, odometry[i].frame_id,
                         odometry[i - 1].pose.inverse() * odometry[i].pose,
                         info_odom, FactorKind::kOdometry});
  }
  const std::size_t step = static_cast<std::size_t>(cfg.keyframe_factor / cfg.odometry_factor);
  for (std::size_t k = 0; k < spans; ++k) {
    if (gate_keyframe(reduce_confidence(confidences[k]), cfg) == GateDecision::kReject) {
      continue;
    }
    const GraphNode& a = odometry[k * step];
    const GraphNode& b = odometry[(k + 1) * step];
    const Pose z = keyframe_measurements ? (*keyframe_measurements)[k]
                                         : a.pose.inverse() * b.pose;
    g.factors.push_back({a.frame_id, b.frame_id, z, info_key, FactorKind::kKeyframe});
  }
  return g;
}

Vec6 factor_residual(const GraphFactor& f, const Pose& from, const Pose& to) {
  return se3_log(f.measurement.inverse() * (from.inverse() * to));
}

double graph_error(const PoseGraph& g) {
  double e = 0.0;
  for (const auto& f : g.factors) {
    const Vec6 r = factor_residual(f, g.nodes[g.index_of(f.from)].pose,
                                   g.nodes[g.index_of(f.to)].pose);
    e += r.dot(f.information * r);
  }
  return e;
}

namespace {

void check_connected(const PoseGraph& g) {
  const std::size_t n = g.nodes.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& f : g.factors) {
    const std::size_t a = find(g.index_of(f.from)), b = find(g.index_of(f.to));
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  const std::size_t root = find(g.index_of(g.anchored));
  std::string loose;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (find(i) == root) continue;
    if (count < 16) loose += (count ? "," : "") + std::to_string(g.nodes[i].frame_id);
    ++count;
  }
  if (count > 0) {
    throw Error(ErrorCode::kSingularSystem,
                std::to_string(count) + " node(s) not connected to anchor " +
                    std::to_string(g.anchored) + ": frames " + loose +
                    (count > 16 ? ",..." : ""));
  }
}

struct Linearization {
  Eigen::MatrixXd h;
  Eigen::VectorXd g;
};

Linearization linearize(const PoseGraph& graph, const std::vector<long>& slot) {
  const long dim = 6 * static_cast<long>(std::count_if(
                           slot.begin(), slot.end(), [](long s) { return s >= 0; }));
  Linearization lin{Eigen::MatrixXd::Zero(dim, dim), Eigen::VectorXd::Zero(dim)};
  constexpr double h = 1e-6;
  for (const auto& f : graph.factors) {
    const std::size_t ia = graph.index_of(f.from), ib = graph.index_of(f.to);
    const Pose& pa = graph.nodes[ia].pose;
    const Pose& pb = graph.nodes[ib].pose;
    const Vec6 r = factor_residual(f, pa, pb);
    Eigen::Matrix<double, 6, 6> ja, jb;
    for (int d = 0; d < 6; ++d) {
      Vec6 e = Vec6::Zero();
      e[d] = h;
      ja.col(d) = (factor_residual(f, pa * se3_exp(e), pb) -
                   factor_residual(f, pa * se3_exp(-e), pb)) / (2.0 * h);
      jb.col(d) = (factor_residual(f, pa, pb * se3_exp(e)) -
                   factor_residual(f, pa, pb * se3_exp(-e))) / (2.0 * h);
    }
    const long sa = slot[ia], sb = slot[ib];
    const Mat6& w = f.information;
    if (sa >= 0) {
      lin.h.block<6, 6>(6 * sa, 6 * sa) += ja.transpose() * w * ja;
      lin.g.segment<6>(6 * sa) += ja.transpose() * w * r;
    }
    if (sb >= 0) {
      lin.h.block<6, 6>(6 * sb, 6 * sb) += jb.transpose() * w * jb;
      lin.g.segment<6>(6 * sb) += jb.transpose() * w * r;
    }
    if (sa >= 0 && sb >= 0) {
      const Mat6 cross = ja.transpose() * w * jb;
      lin.h.block<6, 6>(6 * sa, 6 * sb) += cross;
      lin.h.block<6, 6>(6 * sb, 6 * sa) += cross.transpose();
    }
  }
  return lin;
}

}  // namespace

OptimizeResult optimize(const PoseGraph& graph, const OptimizeOptions& options) {
  graph.validate();
  check_connected(graph);
  if (options.max_iters < 0 || !(options.tol >= 0.0) ||
      !(options.initial_damping > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bad optimizer options");
  }

  OptimizeResult out{graph, 0, {}};
  std::vector<long> slot(graph.nodes.size(), -1);
  long free_count = 0;
  const std::size_t anchor = graph.index_of(graph.anchored);
  for (std::size_t i = 0; i < slot.size(); ++i) {
    if (i != anchor) slot[i] = free_count++;
  }
  double error = graph_error(out.graph);
  out.error_history.push_back(error);
  if (free_count == 0) return out;

  double mu = options.initial_damping;
  for (int iter = 0; iter < options.max_iters; ++iter) {
    const Linearization lin = linearize(out.graph, slot);
    bool accepted = false;
    bool converged = false;
    while (mu < 1e12) {
      Eigen::MatrixXd damped = lin.h;
      damped.diagonal().array() += mu;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      if (ldlt.info() != Eigen::Success) {
        throw Error(ErrorCode::kSingularSystem, "normal equations not solvable");
      }
      const Eigen::VectorXd delta = ldlt.solve(-lin.g);
      if (!delta.allFinite()) {
        throw Error(ErrorCode::kSingularSystem, "non-finite Gauss-Newton step");
      }
      if (delta.norm() < options.tol) {
        converged = true;
        break;
      }
      PoseGraph trial = out.graph;
      for (std::size_t i = 0; i < slot.size(); ++i) {
        if (slot[i] < 0) continue;
        trial.nodes[i].pose =
            trial.nodes[i].pose * se3_exp(delta.segment<6>(6 * slot[i]));
      }
      const double trial_error = graph_error(trial);
      if (trial_error <= error) {
        out.graph = std::move(trial);
        error = trial_error;
        out.error_history.push_back(error);
        mu = std::max(mu / 10.0, 1e-12);
        accepted = true;
        break;
      }
      mu *= 10.0;
    }
    if (converged || !accepted) break;
    ++out.iterations;
  }
  return out;
}

namespace {

void write_pose(std::ostream& out, const Pose& p) {
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out << ' ' << format_double(p.rotation(r, c));
    out << ' ' << format_double(p.translation[r]);
  }
}

Pose read_pose(const std::vector<std::string_view>& tok, std::size_t at, int line_no) {
  Pose p;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) p.rotation(r, c) = parse_double(tok[at + 4 * r + c], line_no);
    p.translation[r] = parse_double(tok[at + 4 * r + 3], line_no);
  }
  return p;
}

}  // namespace

void write_graph(std::ostream& out, const PoseGraph& g) {
  // Anchor first so a reload recovers it.
  const std::size_t anchor = g.index_of(g.anchored);
  auto vertex = [&](const GraphNode& n) {
    out << "VERTEX " << n.frame_id;
    write_pose(out, n.pose);
    out << '\n';
  };
  vertex(g.nodes[anchor]);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (i != anchor) vertex(g.nodes[i]);
  }
  for (const auto& f : g.factors) {
    out << "EDGE " << f.from << ' ' << f.to;
    write_pose(out, f.measurement);
    for (int r = 0; r < 6; ++r) {
      for (int c = r; c < 6; ++c) out << ' ' << format_double(f.information(r, c));
    }
    out << '\n';
  }
}

PoseGraph read_graph(std::istream& in) {
  PoseGraph g;
  bool have_anchor = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tok = split_whitespace(line);
    if (tok.empty() || tok[0].starts_with('#')) continue;
    if (tok[0] == "VERTEX") {
      if (tok.size() != 14) {
        throw Error(ErrorCode::kParseError,
                    "line " + std::to_string(line_no) + ": VERTEX needs 13 fields");
      }
      GraphNode n{parse_long(tok[1], line_no), read_pose(tok, 2, line_no)};
      if (!have_anchor) {
        g.anchored = n.frame_id;
        have_anchor = true;
      }
      g.nodes.push_back(n);
    } else if (tok[0] == "EDGE") {
      if (tok.size() != 36) {
        throw Error(ErrorCode::kParseError,
                    "line " + std::to_string(line_no) + ": EDGE needs 35 fields");
      }
      GraphFactor f;
      f.from = parse_long(tok[1], line_no);
      f.to = parse_long(tok[2], line_no);
      f.measurement = read_pose(tok, 3, line_no);
      std::size_t k = 15;
      for (int r = 0; r < 6; ++r) {
        for (int c = r; c < 6; ++c) {
          f.information(r, c) = f.information(c, r) = parse_double(tok[k++], line_no);
        }
      }
      g.factors.push_back(f);
    } else {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) +
                                              ": unknown record '" +
                                              std::string(tok[0]) + "'");
    }
  }
  std::sort(g.nodes.begin(), g.nodes.end(),
            [](const GraphNode& a, const GraphNode& b) { return a.frame_id < b.frame_id; });
  // Edges between non-adjacent nodes are key-frame factors.
  for (auto& f : g.factors) {
    const std::size_t a = g.index_of(f.from), b = g.index_of(f.to);
    f.kind = b == a + 1 ? FactorKind::kOdometry : FactorKind::kKeyframe;
  }
  g.validate();
  return g;
}

}  // namespace evlo
