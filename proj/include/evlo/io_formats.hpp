#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "evlo/core_types.hpp"
#include "evlo/pose_graph.hpp"
#include "evlo/pot.hpp"
#include "evlo/trajectory.hpp"

namespace evlo {

// KITTI pose files: one pose per line, 12 floats, row-major top 3x4.
// Rotations off by less than 1e-3 (orthonormality error) are projected back
// onto SO(3); larger violations and reflections throw NonRigid. Malformed
// lines throw ParseError naming line and column. Frame ids are 0..n-1.
Trajectory read_kitti_poses(const std::filesystem::path& path);
Trajectory read_kitti_poses(std::istream& in);
void write_kitti_poses(const std::filesystem::path& path, const Trajectory& t);
void write_kitti_poses(std::ostream& out, const Trajectory& t);
inline constexpr double kRepairTolerance = 1e-3;

// Velodyne scans: little-endian float32 records (x, y, z, intensity).
// A length that is not a multiple of 16 throws TruncatedRecord.
PointCloud read_velodyne_bin(const std::filesystem::path& path);
// Missing intensities are written as 0.
void write_velodyne_bin(const std::filesystem::path& path, const PointCloud& cloud);

// Exactly n points in draw order: without replacement (partial Fisher-Yates)
// when the cloud holds at least n points, with replacement otherwise. Draws
// come from Rng(seed).below, so the result is integer-exact on every
// platform. Throws InvalidArgument on an empty cloud.
PointCloud subsample(const PointCloud& cloud, std::size_t n, std::uint64_t seed);

struct RunConfig {
  PotConfig pot;
  GateConfig gate;
  int descriptor_k = 16;
  double temperature = 0.005;
  int sample_points = 1024;
  std::uint64_t seed = 1;
  Vec6 sigma_odom = default_sigma_odom();  // radians / meters
  Vec6 sigma_key = default_sigma_key();
  OptimizeOptions optimizer;

  // Throws InvalidArgument on any out-of-range field, including
  // sample_points < descriptor_k + 1.
  void validate() const;
};

// Line-oriented `key = value`; '#' starts a comment. Keys:
//   pot.mass pot.iterations pot.regularizer pot.scaling (dykstra|alternating)
//   pot.allow_log_domain pot.force_log_domain pot.early_exit (true|false)
//   gate.theta_min gate.theta_max gate.odometry_factor gate.keyframe_factor
//   descriptor.k descriptor.temperature sample_points seed
//   sigma_odom sigma_key (three angles in degrees, three lengths in meters)
//   optimizer.max_iters optimizer.tol
// Unknown or repeated keys throw ParseError.
RunConfig parse_run_config(std::istream& in);
RunConfig read_run_config(const std::filesystem::path& path);
// Writes every key; parse_run_config reads it back exactly.
void write_run_config(std::ostream& out, const RunConfig& cfg);

// frame_id,r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz
void write_trajectory_csv(std::ostream& out, const Trajectory& t);
Trajectory read_trajectory_csv(std::istream& in);

// Whole-file helpers; IoError names the path.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace evlo
