#pragma once

#include <iosfwd>
#include <vector>

#include "evlo/core_types.hpp"

namespace evlo {

enum class GateDecision { kReject, kRefine };

struct GateConfig {
  double theta_min = 0.2;
  double theta_max = 0.7;
  int odometry_factor = 2;  // o
  int keyframe_factor = 4;  // p

  // 0 <= theta_min < theta_max <= 1, o >= 1, p a positive multiple of o.
  void validate() const;
};

// Reject (skip refinement) when theta_min <= confidence <= theta_max.
GateDecision gate_keyframe(double confidence, const GateConfig& cfg);
// Per-axis confidences reduce to their minimum.
double reduce_confidence(const Vec6& confidence);

struct GraphNode {
  long frame_id = 0;
  Pose pose;
};

enum class FactorKind { kOdometry, kKeyframe };

struct GraphFactor {
  long from = 0;  // frame ids, from < to
  long to = 0;
  Pose measurement;  // expected node(from)^-1 * node(to)
  Mat6 information = Mat6::Identity();
  FactorKind kind = FactorKind::kOdometry;
};

struct PoseGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphFactor> factors;
  long anchored = 0;

  std::size_t index_of(long frame_id) const;  // throws InvalidArgument
  // Factor endpoints exist with from < to, information symmetric and
  // positive definite, anchor present.
  void validate() const;
  std::size_t keyframe_factor_count() const;
};

// Defaults: 0.3 deg per rotation axis and 0.05 m per translation axis.
Vec6 default_sigma_odom();
inline Vec6 default_sigma_key() { return default_sigma_odom() / 2.0; }
// diag(1 / sigma^2)
Mat6 information_from_sigma(const Vec6& sigma);

// Nodes at every odometry frame (ids spaced by o, anchored at the first),
// consecutive odometry factors, and one candidate key-frame factor per
// p-frame span, admitted when the gate returns Refine for the span's
// minimum confidence. `confidences` holds one entry per span. Key-frame
// measurements default to the composed odometry across the span; pass
// `keyframe_measurements` (one per span) to use direct measurements.
// Throws MisalignedInputs when spacings or list lengths disagree.
PoseGraph build_graph(const std::vector<GraphNode>& odometry,
                      const std::vector<Vec6>& confidences,
                      const GateConfig& cfg,
                      const Vec6& sigma_odom = default_sigma_odom(),
                      const Vec6& sigma_key = default_sigma_key(),
                      const std::vector<Pose>* keyframe_measurements = nullptr);

// Per-span gate decisions, in span order.
std::vector<GateDecision> gate_spans(const std::vector<Vec6>& confidences,
                                     const GateConfig& cfg);

// log(measurement^-1 * node_from^-1 * node_to), ordered (rotation, translation).
Vec6 factor_residual(const GraphFactor& f, const Pose& from, const Pose& to);
// sum r^T Omega r over all factors.
double graph_error(const PoseGraph& g);

struct OptimizeOptions {
  int max_iters = 50;
  double tol = 1e-10;  // stop when the step norm falls below this
  double initial_damping = 1e-4;
};

struct OptimizeResult {
  PoseGraph graph;
  int iterations = 0;
  std::vector<double> error_history;  // initial error, then one per accepted step
};

// Damped Gauss-Newton over right perturbations node <- node * exp(delta).
// The anchored node is held fixed. Throws SingularSystem naming the frames
// of any component not connected to the anchor.
OptimizeResult optimize(const PoseGraph& graph, const OptimizeOptions& options = {});

// VERTEX id r00 r01 r02 tx r10 r11 r12 ty r20 r21 r22 tz
// EDGE from to <12 measurement values> <21 upper-triangular information values>
// The first vertex is the anchor.
void write_graph(std::ostream& out, const PoseGraph& g);
PoseGraph read_graph(std::istream& in);

}  // namespace evlo
