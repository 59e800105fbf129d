#pragma once

#include <vector>

#include "evlo/core_types.hpp"

namespace evlo {

// Ordered absolute poses with their frame ids and cumulative path length.
struct Trajectory {
  std::vector<long> frame_ids;
  std::vector<Pose> poses;
  std::vector<double> cumulative_lengths;  // [0] = 0

  // Frame ids default to 0..n-1.
  static Trajectory from_poses(std::vector<Pose> poses,
                               std::vector<long> frame_ids = {});

  std::size_t size() const { return poses.size(); }
  bool empty() const { return poses.empty(); }

  // Throws InvalidArgument on length mismatch, non-increasing frame ids or
  // cumulative lengths inconsistent with the translations.
  void validate() const;
};

}  // namespace evlo
