#pragma once

// Shared synthetic fixtures for the unit and acceptance tests.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "evlo/core_types.hpp"
#include "evlo/pose_graph.hpp"
#include "evlo/rng.hpp"

namespace evlo::fixture {

inline double deg(double d) { return d * std::numbers::pi / 180.0; }

inline int planted_column(int i, int n) { return (i * 7 + 3) % n; }

// -log of a row softmax over N(0,1) logits, the shape of a matching cost.
inline Eigen::MatrixXd softmax_cost(Rng& rng, int n, int m) {
  Eigen::MatrixXd c(n, m);
  for (int i = 0; i < n; ++i) {
    Eigen::RowVectorXd logits(m);
    for (int j = 0; j < m; ++j) logits[j] = rng.normal();
    c.row(i) = (std::log(logits.array().exp().sum()) - logits.array()).matrix();
  }
  return c;
}

// Row-softmax cost over N(0,1) logits with a planted bijection i -> (7i + 3)
// mod n whose logit beats every other entry of its row and column by 1.
inline Eigen::MatrixXd planted_cost(Rng& rng, int n) {
  Eigen::MatrixXd logits(n, n);
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = rng.normal();
  for (int i = 0; i < n; ++i) {
    const int j = planted_column(i, n);
    logits(i, j) = std::max(logits.row(i).maxCoeff(), logits.col(j).maxCoeff()) + 1.0;
  }
  Eigen::MatrixXd c(n, n);
  for (int i = 0; i < n; ++i) {
    c.row(i) = (std::log(logits.row(i).array().exp().sum()) - logits.row(i).array()).matrix();
  }
  return c;
}

struct NoisyLoop {
  std::vector<Pose> truth;
  PoseGraph graph;
};

// 20 nodes around a circle of radius 10 m. Odometry measurements carry
// sigma_rot = 0.5 deg and sigma_t = 0.05 m noise per axis; the initial nodes
// are their composition. Four exact key-frame factors span every 4 nodes.
inline NoisyLoop noisy_loop(std::uint64_t seed, int nodes = 20) {
  NoisyLoop f;
  const double step = 2.0 * std::numbers::pi / nodes;
  const Pose rel{rot_z(step), Vec3(10.0 * std::sin(step), 10.0 * (1.0 - std::cos(step)), 0.0)};
  f.truth.push_back(Pose::identity());
  for (int i = 1; i < nodes; ++i) f.truth.push_back(f.truth.back() * rel);

  Rng rng(seed);
  std::vector<GraphNode> odom{{0, Pose::identity()}};
  for (int i = 1; i < nodes; ++i) {
    const Vec3 w(rng.normal(0, deg(0.5)), rng.normal(0, deg(0.5)), rng.normal(0, deg(0.5)));
    const Vec3 dt(rng.normal(0, 0.05), rng.normal(0, 0.05), rng.normal(0, 0.05));
    const Pose noise{rot_axis_angle(w, w.norm()), dt};
    odom.push_back({i, odom.back().pose * rel * noise});
  }
  GateConfig cfg;
  cfg.odometry_factor = 1;
  cfg.keyframe_factor = 4;
  std::vector<Pose> keys;
  for (int k = 0; (k + 1) * 4 < nodes; ++k) {
    keys.push_back(f.truth[4 * k].inverse() * f.truth[4 * k + 4]);
  }
  const std::vector<Vec6> conf(keys.size(), Vec6::Constant(0.95));
  const Vec6 sigma_odom = (Vec6() << Vec3::Constant(deg(0.5)), Vec3::Constant(0.05)).finished();
  f.graph = build_graph(odom, conf, cfg, sigma_odom, sigma_odom / 2.0, &keys);
  return f;
}

inline double translation_rmse(const std::vector<GraphNode>& nodes,
                               const std::vector<Pose>& truth) {
  double s = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    s += (nodes[i].pose.translation - truth[i].translation).squaredNorm();
  }
  return std::sqrt(s / static_cast<double>(nodes.size()));
}

}  // namespace evlo::fixture
