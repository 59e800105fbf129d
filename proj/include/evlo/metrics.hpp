#pragma once

#include <iosfwd>
#include <vector>

#include "evlo/core_types.hpp"
#include "evlo/trajectory.hpp"

namespace evlo {

// Angle of R_gt^T R in degrees, in [0, 180]: acos((tr(R_gt^T R) - 1) / 2).
double angular_deviation(const Mat3& r_gt, const Mat3& r);
double translation_error(const Vec3& t_gt, const Vec3& t);

inline constexpr double kSegmentLengths[] = {100, 200, 300, 400,
                                             500, 600, 700, 800};

struct Segment {
  std::size_t first = 0;  // trajectory indices
  std::size_t last = 0;
  double length = 0.0;    // nominal length L
};

// Every (start, L) whose forward gt arc reaches L; the endpoint is the first
// frame with arc >= L. Starts step by one frame.
std::vector<Segment> enumerate_segments(const Trajectory& gt);

struct LengthDrift {
  double length = 0.0;
  double rre_deg_per_100m = 0.0;
  double rte_percent = 0.0;
  std::size_t segments = 0;
};

struct DriftReport {
  double rre_deg_per_100m = 0.0;  // mean over all segments
  double rte_percent = 0.0;
  std::vector<LengthDrift> per_length;  // lengths with at least one segment

  std::size_t segment_count() const;
};

// Throws MisalignedInputs when the frame ids differ, EmptyOverlap when no
// segment exists.
DriftReport kitti_drift(const Trajectory& gt, const Trajectory& est);

// length,rre_deg_per_100m,rte_percent,segments; the last row is "all".
void write_drift_csv(std::ostream& out, const DriftReport& r);

}  // namespace evlo
