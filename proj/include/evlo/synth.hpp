#pragma once

#include <cstdint>
#include <vector>

#include "evlo/core_types.hpp"
#include "evlo/trajectory.hpp"

namespace evlo {

inline constexpr double kSensorRange = 120.0;  // meters

// Fractions of landmarks drawn from each surface family.
struct SurfaceMix {
  double planes = 0.4;   // ground patches and walls
  double edges = 0.3;    // poles and horizontal edges
  double scatter = 0.3;  // vegetation-like blobs
};

// Constant motion over frames [first_frame, last_frame]: the ego pose
// advances `meters_per_frame` along its own x axis and yaws by
// `yaw_rate_deg` per frame.
struct SpeedSegment {
  int first_frame = 0;
  int last_frame = 0;
  double meters_per_frame = 1.0;
  double yaw_rate_deg = 0.0;
};

struct SceneSpec {
  std::uint64_t seed = 1;
  int n_landmarks = 2000;
  double extent = 60.0;  // landmarks lie in [-extent, extent]^2
  SurfaceMix surface_mix;
  double noise_sigma = 0.0;
  double dropout = 0.0;
  int frames = 10;
  std::vector<SpeedSegment> speed_profile;

  void validate() const;
};

struct SyntheticSequence {
  std::vector<PointCloud> scans;  // ego frame
  std::vector<std::vector<std::size_t>> landmark_ids;  // per scan point
  Trajectory gt;
};

// Landmark sets are built from whole objects and truncated to exactly n.
std::vector<Vec3> generate_landmarks(std::uint64_t seed, int n, double extent,
                                     const SurfaceMix& mix,
                                     std::vector<int>* object_ids = nullptr);

SyntheticSequence generate_sequence(const SceneSpec& spec);

// Adds extra isotropic noise to scans [first, last] (clipped to the
// sequence), each from its own derived seed.
void perturb_scans(std::vector<PointCloud>& scans, int first, int last,
                   double sigma, std::uint64_t seed);

// Fraction of scan `a` points whose landmark also appears in scan `b`.
double shared_fraction(const std::vector<std::size_t>& a,
                       const std::vector<std::size_t>& b);

enum class OverlapMode {
  kSpatial,  // both scans are windows over a landmark strip
  kSubset,   // both scans sample the same region with disjoint extras
  kOcclusion,  // whole objects are visible in only one of the scans
};

struct PairSpec {
  std::uint64_t seed = 1;
  int points = 512;
  double overlap = 0.7;
  double noise_sigma = 0.02;
  double max_rotation_deg = 5.0;
  double max_translation = 2.0;
  double extent = 30.0;
  SurfaceMix surface_mix;
  OverlapMode mode = OverlapMode::kOcclusion;
};

struct SyntheticPair {
  PointCloud source;
  PointCloud target;
  Pose gt;  // target point = gt * source point for shared landmarks
  std::vector<std::size_t> source_ids, target_ids;
};

SyntheticPair generate_pair(const PairSpec& spec);

}  // namespace evlo
