#include <gtest/gtest.h>

#include "evlo/alignment.hpp"
#include "evlo/error.hpp"
#include "evlo/metrics.hpp"
#include "evlo/synth.hpp"

namespace evlo {
namespace {

SceneSpec base_spec() {
  SceneSpec s;
  s.seed = 3;
  s.n_landmarks = 800;
  s.extent = 40.0;
  s.frames = 8;
  s.speed_profile = {{0, 7, 1.0, 2.0}};
  return s;
}

TEST(Synth, DeterministicPerSeed) {
  SceneSpec s = base_spec();
  s.noise_sigma = 0.02;
  s.dropout = 0.1;
  const auto a = generate_sequence(s), b = generate_sequence(s);
  ASSERT_EQ(a.scans.size(), b.scans.size());
  for (std::size_t f = 0; f < a.scans.size(); ++f) {
    EXPECT_EQ(a.scans[f].points, b.scans[f].points);
    EXPECT_EQ(a.landmark_ids[f], b.landmark_ids[f]);
    EXPECT_EQ(a.gt.poses[f].matrix(), b.gt.poses[f].matrix());
  }
  s.seed = 4;
  EXPECT_NE(generate_sequence(s).scans[0].points, a.scans[0].points);
}

TEST(Synth, ZeroSpeedGivesIdenticalScans) {
  SceneSpec s = base_spec();
  s.speed_profile = {{0, 7, 0.0, 0.0}};
  const auto seq = generate_sequence(s);
  for (std::size_t f = 0; f < seq.scans.size(); ++f) {
    EXPECT_EQ(seq.scans[f].points, seq.scans[0].points);
    EXPECT_EQ(seq.gt.poses[f].matrix(), Eigen::Matrix4d::Identity());
  }
}

TEST(Synth, PureTranslationStep) {
  SceneSpec s = base_spec();
  s.speed_profile = {{0, 7, 1.0, 0.0}};
  const auto seq = generate_sequence(s);
  for (std::size_t f = 1; f < seq.scans.size(); ++f) {
    const Pose rel = seq.gt.poses[f - 1].inverse() * seq.gt.poses[f];
    EXPECT_EQ(rel.rotation, Mat3::Identity());
    EXPECT_EQ(rel.translation, Vec3(1, 0, 0));
  }
  EXPECT_EQ(seq.gt.cumulative_lengths.back(), 7.0);
}

TEST(Synth, ScansAreLandmarksInEgoFrameWithinRange) {
  SceneSpec s = base_spec();
  s.extent = 200.0;
  const auto seq = generate_sequence(s);
  const auto landmarks = generate_landmarks(s.seed, s.n_landmarks, s.extent, s.surface_mix);
  ASSERT_EQ(landmarks.size(), static_cast<std::size_t>(s.n_landmarks));
  for (std::size_t f = 0; f < seq.scans.size(); ++f) {
    const Pose to_ego = seq.gt.poses[f].inverse();
    std::size_t in_range = 0;
    for (const auto& l : landmarks) in_range += (to_ego * l).norm() <= kSensorRange;
    EXPECT_EQ(seq.scans[f].size(), in_range);
    for (std::size_t i = 0; i < seq.scans[f].size(); ++i) {
      const Vec3 expect = to_ego * landmarks[seq.landmark_ids[f][i]];
      EXPECT_LT((seq.scans[f].points[i] - expect).norm(), 1e-9);
    }
  }
}

TEST(Synth, OverlapFallsWithSpeed) {
  for (std::uint64_t seed : {5, 6, 7}) {
    double prev = 2.0;
    for (double speed : {0.5, 1.0, 2.0, 4.0}) {
      SceneSpec s;
      s.seed = seed;
      s.n_landmarks = 4000;
      s.extent = 150.0;
      s.frames = 21;
      s.speed_profile = {{0, 20, speed, 0.0}};
      const auto seq = generate_sequence(s);
      double sum = 0.0;
      for (int f = 0; f < 20; ++f) {
        sum += shared_fraction(seq.landmark_ids[f], seq.landmark_ids[f + 1]);
      }
      const double mean = sum / 20.0;
      EXPECT_LT(mean, prev) << "seed " << seed << " speed " << speed;
      prev = mean;
    }
  }
}

TEST(Synth, DropoutRemovesThatFraction) {
  SceneSpec s = base_spec();
  s.dropout = 0.25;
  const auto seq = generate_sequence(s);
  for (const auto& scan : seq.scans) {
    EXPECT_NEAR(static_cast<double>(scan.size()) / s.n_landmarks, 0.75, 0.05);
  }
}

TEST(Synth, InvalidSpecs) {
  SceneSpec s = base_spec();
  s.surface_mix = {0.5, 0.5, 0.5};
  EXPECT_THROW(generate_sequence(s), Error);
  s = base_spec();
  s.dropout = 1.0;
  EXPECT_THROW(generate_sequence(s), Error);
}

TEST(Synth, PairsShareRequestedOverlap) {
  PairSpec p;
  p.seed = 6;
  const auto pair = generate_pair(p);
  EXPECT_EQ(pair.source.size(), 512u);
  EXPECT_EQ(pair.target.size(), 512u);
  EXPECT_NEAR(shared_fraction(pair.source_ids, pair.target_ids), 0.7, 0.05);
}

TEST(Synth, NoiselessConsecutiveFramesWithEightyPercentOverlap) {
  // 20% per-scan dropout leaves consecutive scans sharing about 80% of
  // their landmarks.
  SceneSpec s;
  s.seed = 7;
  s.n_landmarks = 600;
  s.extent = 40.0;
  s.dropout = 0.2;
  s.frames = 21;
  s.speed_profile = {{0, 20, 1.0, 0.5}};
  const auto seq = generate_sequence(s);
  int good = 0;
  for (int f = 0; f < 20; ++f) {
    const double overlap = shared_fraction(seq.landmark_ids[f + 1], seq.landmark_ids[f]);
    EXPECT_NEAR(overlap, 0.8, 0.05);
    const Pose gt = seq.gt.poses[f].inverse() * seq.gt.poses[f + 1];
    try {
      const auto r = register_pair(seq.scans[f + 1], seq.scans[f]);
      good += angular_deviation(gt.rotation, r.pose.rotation) < 0.5 &&
              translation_error(gt.translation, r.pose.translation) < 0.05;
    } catch (const Error&) {
    }
  }
  EXPECT_GE(good, 19) << good << " of 20 pairs within 0.5 deg and 0.05 m";
}

}  // namespace
}  // namespace evlo
