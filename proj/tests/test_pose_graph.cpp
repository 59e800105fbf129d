#include <gtest/gtest.h>

#include <sstream>

#include "../src/lie.hpp"
#include "evlo/error.hpp"
#include "evlo/pose_graph.hpp"
#include "evlo/rng.hpp"
#include "fixtures.hpp"

namespace evlo {
namespace {

using fixture::deg;

Pose random_pose(Rng& rng, double angle = 1.0, double dist = 5.0) {
  const Vec3 axis(rng.normal(), rng.normal(), rng.normal());
  return {rot_axis_angle(axis, rng.uniform(-angle, angle)),
          Vec3(rng.uniform(-dist, dist), rng.uniform(-dist, dist), rng.uniform(-dist, dist))};
}

double pose_diff(const Pose& a, const Pose& b) {
  return (a.rotation - b.rotation).norm() + (a.translation - b.translation).norm();
}

std::vector<GraphNode> chain(int frames, int o, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GraphNode> nodes{{0, Pose::identity()}};
  for (int f = o; f < frames; f += o) {
    nodes.push_back({f, nodes.back().pose * random_pose(rng, 0.1, 1.0)});
  }
  return nodes;
}

TEST(Gate, TruthTable) {
  const GateConfig cfg;
  EXPECT_EQ(gate_keyframe(0.5, cfg), GateDecision::kReject);
  EXPECT_EQ(gate_keyframe(0.2, cfg), GateDecision::kReject);
  EXPECT_EQ(gate_keyframe(0.7, cfg), GateDecision::kReject);
  EXPECT_EQ(gate_keyframe(0.19, cfg), GateDecision::kRefine);
  EXPECT_EQ(gate_keyframe(0.71, cfg), GateDecision::kRefine);
  EXPECT_EQ(gate_keyframe(0.95, cfg), GateDecision::kRefine);
  EXPECT_EQ(gate_keyframe(-3.0, cfg), GateDecision::kRefine);
  EXPECT_EQ(gate_keyframe(1.5, cfg), GateDecision::kRefine);
}

TEST(Gate, RejectBandIsConvex) {
  const GateConfig cfg;
  for (double c = 0.2; c <= 0.7; c += 0.001) {
    EXPECT_EQ(gate_keyframe(c, cfg), GateDecision::kReject) << c;
  }
}

TEST(Gate, ReducesByMinimum) {
  Vec6 c;
  c << 0.9, 0.8, 0.95, 0.5, 0.99, 0.9;
  EXPECT_EQ(reduce_confidence(c), 0.5);
}

TEST(Gate, ConfigValidation) {
  GateConfig cfg;
  cfg.keyframe_factor = 3;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.theta_min = 0.8;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(BuildGraph, InBandGivesOdometryOnly) {
  const auto nodes = chain(41, 2, 1);
  const GateConfig cfg;
  const auto g = build_graph(nodes, std::vector<Vec6>(10, Vec6::Constant(0.5)), cfg);
  EXPECT_EQ(g.keyframe_factor_count(), 0u);
  EXPECT_EQ(g.factors.size(), nodes.size() - 1);
  EXPECT_EQ(g.anchored, 0);
}

TEST(BuildGraph, ConfidentCountsFloorFramesOverP) {
  for (int frames : {9, 12, 13, 41}) {
    for (int o : {1, 2}) {
      GateConfig cfg;
      cfg.odometry_factor = o;
      const auto nodes = chain(frames, o, 2);
      const std::size_t spans = static_cast<std::size_t>((frames - 1) / 4);
      const auto g = build_graph(nodes, std::vector<Vec6>(spans, Vec6::Constant(0.95)), cfg);
      EXPECT_EQ(g.keyframe_factor_count(), spans) << frames << " " << o;
    }
  }
}

TEST(BuildGraph, MixedGatingMatchesListing) {
  // 12 frames, o = 2, p = 4: nodes 0,2,...,10 and key spans 0-4, 4-8.
  const auto nodes = chain(12, 2, 3);
  Vec6 over = Vec6::Constant(0.95);
  Vec6 in_band;
  in_band << 0.9, 0.9, 0.9, 0.9, 0.9, 0.5;
  const GateConfig cfg;
  const auto g = build_graph(nodes, {over, in_band}, cfg);
  struct Expected {
    long from, to;
    FactorKind kind;
  };
  const std::vector<Expected> listing{{0, 2, FactorKind::kOdometry},
                                      {2, 4, FactorKind::kOdometry},
                                      {4, 6, FactorKind::kOdometry},
                                      {6, 8, FactorKind::kOdometry},
                                      {8, 10, FactorKind::kOdometry},
                                      {0, 4, FactorKind::kKeyframe}};
  ASSERT_EQ(g.factors.size(), listing.size());
  for (std::size_t i = 0; i < listing.size(); ++i) {
    EXPECT_EQ(g.factors[i].from, listing[i].from);
    EXPECT_EQ(g.factors[i].to, listing[i].to);
    EXPECT_EQ(g.factors[i].kind, listing[i].kind);
  }
  EXPECT_LT(pose_diff(g.factors[5].measurement, nodes[0].pose.inverse() * nodes[2].pose), 1e-12);
  EXPECT_EQ(g.factors[0].information, information_from_sigma(default_sigma_odom()));
  EXPECT_EQ(g.factors[5].information, information_from_sigma(default_sigma_key()));

  const auto decisions = gate_spans({over, in_band}, cfg);
  EXPECT_EQ(decisions, (std::vector<GateDecision>{GateDecision::kRefine, GateDecision::kReject}));
}

TEST(BuildGraph, Misaligned) {
  const GateConfig cfg;
  auto nodes = chain(12, 2, 4);
  EXPECT_THROW(build_graph(nodes, {Vec6::Constant(0.5)}, cfg), Error);
  try {
    build_graph(nodes, std::vector<Vec6>(3, Vec6::Constant(0.5)), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMisalignedInputs);
  }
  nodes[3].frame_id = 7;
  EXPECT_THROW(build_graph(nodes, std::vector<Vec6>(2, Vec6::Constant(0.5)), cfg), Error);
}

TEST(BuildGraph, Deterministic) {
  const auto nodes = chain(30, 2, 5);
  const GateConfig cfg;
  std::vector<Vec6> conf(7, Vec6::Constant(0.1));
  std::stringstream a, b;
  write_graph(a, build_graph(nodes, conf, cfg));
  write_graph(b, build_graph(nodes, conf, cfg));
  EXPECT_EQ(a.str(), b.str());
}

TEST(Optimize, ConsistentChainIsFixedPoint) {
  const auto nodes = chain(21, 2, 6);
  const GateConfig cfg;
  const auto g = build_graph(nodes, std::vector<Vec6>(5, Vec6::Constant(0.95)), cfg);
  EXPECT_LT(graph_error(g), 1e-20);
  const auto r = optimize(g);
  EXPECT_EQ(r.iterations, 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    EXPECT_LT(pose_diff(r.graph.nodes[i].pose, nodes[i].pose), 1e-12);
  }
}

TEST(Optimize, RecoversPerturbedMiddleNode) {
  Rng rng(7);
  const Pose x0 = random_pose(rng), x1 = random_pose(rng), x2 = random_pose(rng);
  PoseGraph g;
  g.nodes = {{0, x0}, {1, x1 * Pose{rot_z(0.2), Vec3(0.3, -0.2, 0.1)}}, {2, x2}};
  g.factors = {{0, 1, x0.inverse() * x1}, {1, 2, x1.inverse() * x2}};
  g.anchored = 0;
  const auto r = optimize(g);
  EXPECT_LT(pose_diff(r.graph.nodes[0].pose, x0), 1e-15);
  EXPECT_LT(pose_diff(r.graph.nodes[1].pose, x1), 1e-9);
  EXPECT_LT(pose_diff(r.graph.nodes[2].pose, x2), 1e-9);
}

TEST(Optimize, NoisyLoopHalvesRmse) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto f = fixture::noisy_loop(seed);
    EXPECT_EQ(f.graph.keyframe_factor_count(), 4u);
    const double before = fixture::translation_rmse(f.graph.nodes, f.truth);
    const auto r = optimize(f.graph);
    const double after = fixture::translation_rmse(r.graph.nodes, f.truth);
    EXPECT_LE(after, 0.5 * before) << "seed " << seed;
  }
}

TEST(Optimize, ErrorHistoryMonotone) {
  const auto f = fixture::noisy_loop(11);
  const auto r = optimize(f.graph);
  ASSERT_GE(r.error_history.size(), 2u);
  for (std::size_t i = 1; i < r.error_history.size(); ++i) {
    EXPECT_LE(r.error_history[i], r.error_history[i - 1]);
  }
  EXPECT_NEAR(r.error_history.back(), graph_error(r.graph), 1e-9 * r.error_history.back() + 1e-15);
}

TEST(Optimize, GaugeInvariant) {
  const auto f = fixture::noisy_loop(12);
  Rng rng(13);
  const Pose q = random_pose(rng, 2.0, 20.0);
  PoseGraph moved = f.graph;
  for (auto& n : moved.nodes) n.pose = q * n.pose;
  const auto a = optimize(f.graph);
  const auto b = optimize(moved);
  for (std::size_t i = 0; i < a.graph.nodes.size(); ++i) {
    EXPECT_LT(pose_diff(b.graph.nodes[i].pose, q * a.graph.nodes[i].pose), 1e-8);
  }
}

TEST(Optimize, Deterministic) {
  const auto f = fixture::noisy_loop(14);
  const auto a = optimize(f.graph), b = optimize(f.graph);
  EXPECT_EQ(a.iterations, b.iterations);
  for (std::size_t i = 0; i < a.graph.nodes.size(); ++i) {
    EXPECT_EQ(a.graph.nodes[i].pose.matrix(), b.graph.nodes[i].pose.matrix());
  }
}

TEST(Optimize, DisconnectedComponentIsSingular) {
  PoseGraph g;
  g.nodes = {{0, {}}, {1, {}}, {2, {}}, {3, {}}};
  g.factors = {{0, 1, {}}, {2, 3, {}}};
  try {
    optimize(g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingularSystem);
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos);
  }
}

TEST(PoseGraph, ValidateRejectsBadInformation) {
  auto g = fixture::noisy_loop(15).graph;
  g.factors[0].information(0, 1) = 1.0;
  EXPECT_THROW(g.validate(), Error);
  g = fixture::noisy_loop(15).graph;
  g.factors[0].information(2, 2) = -1.0;
  EXPECT_THROW(g.validate(), Error);
  g = fixture::noisy_loop(15).graph;
  std::swap(g.factors[0].from, g.factors[0].to);
  EXPECT_THROW(g.validate(), Error);
}

TEST(PoseGraph, DumpLoadRoundTripIsExact) {
  const auto g = fixture::noisy_loop(16).graph;
  std::stringstream ss;
  write_graph(ss, g);
  const auto back = read_graph(ss);
  ASSERT_EQ(back.nodes.size(), g.nodes.size());
  ASSERT_EQ(back.factors.size(), g.factors.size());
  EXPECT_EQ(back.anchored, g.anchored);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    EXPECT_EQ(back.nodes[i].frame_id, g.nodes[i].frame_id);
    EXPECT_EQ(back.nodes[i].pose.matrix(), g.nodes[i].pose.matrix());
  }
  for (std::size_t i = 0; i < g.factors.size(); ++i) {
    EXPECT_EQ(back.factors[i].measurement.matrix(), g.factors[i].measurement.matrix());
    EXPECT_EQ(back.factors[i].information, g.factors[i].information);
    EXPECT_EQ(back.factors[i].kind, g.factors[i].kind);
  }
  std::stringstream again;
  write_graph(again, back);
  EXPECT_EQ(again.str(), ss.str());
  EXPECT_EQ(ss.str().rfind("VERTEX 0 ", 0), 0u);
}

TEST(Lie, ExpLogRoundTrip) {
  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    Vec6 xi;
    for (int k = 0; k < 6; ++k) xi[k] = rng.normal();
    // Rotation magnitudes from 1e-12 up to 3 rad.
    xi.head<3>() = xi.head<3>().normalized() * 3.0 * std::pow(10.0, rng.uniform(-12.5, 0.0));
    const Vec6 back = se3_log(se3_exp(xi));
    EXPECT_LT((back - xi).norm(), 1e-9 * std::max(1.0, xi.norm()));
  }
}

TEST(Lie, LogNearPi) {
  const Vec3 axis = Vec3(1, 2, -0.5).normalized();
  for (double eps : {1e-3, 1e-6, 0.0}) {
    const Vec3 w = so3_log(rot_axis_angle(axis, std::numbers::pi - eps));
    EXPECT_NEAR(w.norm(), std::numbers::pi - eps, 1e-7);
    EXPECT_NEAR(std::abs(w.normalized().dot(axis)), 1.0, 1e-7);
  }
}

TEST(Lie, ResidualOrdering) {
  GraphFactor f{0, 1, Pose::identity()};
  const Vec6 r = factor_residual(f, Pose::identity(), Pose::from_translation(Vec3(1, 2, 3)));
  EXPECT_LT(r.head<3>().norm(), 1e-15);
  EXPECT_LT((r.tail<3>() - Vec3(1, 2, 3)).norm(), 1e-15);
  const Vec6 s = factor_residual(f, Pose::identity(), {rot_z(deg(10)), Vec3::Zero()});
  EXPECT_NEAR(s[2], deg(10), 1e-15);
}

}  // namespace
}  // namespace evlo
