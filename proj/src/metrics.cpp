#include "evlo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "evlo/error.hpp"
#include "evlo/text_io.hpp"

namespace evlo {

double angular_deviation(const Mat3& r_gt, const Mat3& r) {
  // acos((tr - 1) / 2), evaluated as atan2(sin, cos).
  const Mat3 m = r_gt.transpose() * r;
  const double s = 0.5 * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)).norm();
  const double c = 0.5 * (m.trace() - 1.0);
  return std::atan2(s, c) * 180.0 / std::numbers::pi;
}

double translation_error(const Vec3& t_gt, const Vec3& t) { return (t_gt - t).norm(); }

std::vector<Segment> enumerate_segments(const Trajectory& gt) {
  std::vector<Segment> out;
  const auto& arc = gt.cumulative_lengths;
  for (std::size_t i = 0; i < arc.size(); ++i) {
    for (double len : kSegmentLengths) {
      auto it = std::lower_bound(arc.begin() + static_cast<long>(i), arc.end(),
                                 arc[i] + len);
      if (it == arc.end()) break;
      out.push_back({i, static_cast<std::size_t>(it - arc.begin()), len});
    }
  }
  return out;
}

std::size_t DriftReport::segment_count() const {
  std::size_t n = 0;
  for (const auto& l : per_length) n += l.segments;
  return n;
}

DriftReport kitti_drift(const Trajectory& gt, const Trajectory& est) {
  gt.validate();
  est.validate();
  if (gt.frame_ids != est.frame_ids) {
    throw Error(ErrorCode::kMisalignedInputs,
                "ground truth and estimate have different frame ids");
  }
  const auto segments = enumerate_segments(gt);
  if (segments.empty()) {
    throw Error(ErrorCode::kEmptyOverlap, "trajectory shorter than 100 m");
  }
  DriftReport report;
  std::vector<LengthDrift> acc;
  for (double len : kSegmentLengths) acc.push_back({len, 0.0, 0.0, 0});
  double rre_sum = 0.0, rte_sum = 0.0;
  for (const auto& s : segments) {
    const Pose rel_gt = gt.poses[s.first].inverse() * gt.poses[s.last];
    const Pose rel_est = est.poses[s.first].inverse() * est.poses[s.last];
    const Pose err = rel_gt.inverse() * rel_est;
    const double rre = angular_deviation(Mat3::Identity(), err.rotation) / s.length * 100.0;
    const double rte = err.translation.norm() / s.length * 100.0;
    auto& a = acc[static_cast<std::size_t>(s.length / 100.0) - 1];
    a.rre_deg_per_100m += rre;
    a.rte_percent += rte;
    ++a.segments;
    rre_sum += rre;
    rte_sum += rte;
  }
  for (auto& a : acc) {
    if (a.segments == 0) continue;
    a.rre_deg_per_100m /= static_cast<double>(a.segments);
    a.rte_percent /= static_cast<double>(a.segments);
    report.per_length.push_back(a);
  }
  report.rre_deg_per_100m = rre_sum / static_cast<double>(segments.size());
  report.rte_percent = rte_sum / static_cast<double>(segments.size());
  return report;
}

void write_drift_csv(std::ostream& out, const DriftReport& r) {
  out << "length,rre_deg_per_100m,rte_percent,segments\n";
  for (const auto& l : r.per_length) {
    out << format_double(l.length) << ',' << format_double(l.rre_deg_per_100m) << ','
        << format_double(l.rte_percent) << ',' << l.segments << '\n';
  }
  out << "all," << format_double(r.rre_deg_per_100m) << ','
      << format_double(r.rte_percent) << ',' << r.segment_count() << '\n';
}

}  // namespace evlo
