#include "evlo/trajectory.hpp"

#include <cmath>

#include "evlo/error.hpp"

namespace evlo {

Trajectory Trajectory::from_poses(std::vector<Pose> poses,
                                  std::vector<long> frame_ids) {
  Trajectory t;
  if (frame_ids.empty()) {
    frame_ids.resize(poses.size());
    for (std::size_t i = 0; i < poses.size(); ++i) {
      frame_ids[i] = static_cast<long>(i);
    }
  }
  if (frame_ids.size() != poses.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "frame id count differs from pose count");
  }
  t.frame_ids = std::move(frame_ids);
  t.poses = std::move(poses);
  t.cumulative_lengths.resize(t.poses.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < t.poses.size(); ++i) {
    if (i > 0) {
      acc += (t.poses[i].translation - t.poses[i - 1].translation).norm();
    }
    t.cumulative_lengths[i] = acc;
  }
  t.validate();
  return t;
}

void Trajectory::validate() const {
  if (frame_ids.size() != poses.size() ||
      cumulative_lengths.size() != poses.size()) {
    throw Error(ErrorCode::kInvalidArgument, "trajectory fields differ in length");
  }
  for (std::size_t i = 1; i < frame_ids.size(); ++i) {
    if (frame_ids[i] <= frame_ids[i - 1]) {
      throw Error(ErrorCode::kInvalidArgument,
                  "frame ids must be strictly increasing (index " +
                      std::to_string(i) + ")");
    }
  }
  if (!cumulative_lengths.empty() && cumulative_lengths[0] != 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "cumulative length must start at 0");
  }
  for (std::size_t i = 1; i < poses.size(); ++i) {
    const double step =
        (poses[i].translation - poses[i - 1].translation).norm();
    const double d = cumulative_lengths[i] - cumulative_lengths[i - 1];
    if (d < 0.0 || std::abs(d - step) > 1e-9 * std::max(1.0, cumulative_lengths[i])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "cumulative lengths inconsistent at index " + std::to_string(i));
    }
  }
}

}  // namespace evlo
