#include "evlo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <unordered_set>

#include "evlo/error.hpp"
#include "evlo/rng.hpp"

namespace evlo {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

void append_object(Rng& rng, const SurfaceMix& mix, double extent,
                   std::vector<Vec3>& out) {
  const Vec3 c(rng.uniform(-extent, extent), rng.uniform(-extent, extent), 0.0);
  const int k = 8 + static_cast<int>(rng.below(33));
  const double yaw = rng.uniform(0.0, std::numbers::pi);
  const Vec3 dir(std::cos(yaw), std::sin(yaw), 0.0);
  const double u = rng.uniform() * (mix.planes + mix.edges + mix.scatter);

  if (u < mix.planes) {
    if (rng.uniform() < 0.5) {  // ground patch
      const double a = rng.uniform(3.0, 10.0), b = rng.uniform(3.0, 10.0);
      const Vec3 side(-dir.y(), dir.x(), 0.0);
      for (int i = 0; i < k; ++i) {
        out.push_back(c + dir * rng.uniform(-a / 2, a / 2) +
                      side * rng.uniform(-b / 2, b / 2));
      }
    } else {  // wall
      const double len = rng.uniform(3.0, 12.0), h = rng.uniform(2.0, 6.0);
      for (int i = 0; i < k; ++i) {
        out.push_back(c + dir * rng.uniform(-len / 2, len / 2) +
                      Vec3(0, 0, rng.uniform(0.0, h)));
      }
    }
  } else if (u < mix.planes + mix.edges) {
    if (rng.uniform() < 0.5) {  // pole
      const double h = rng.uniform(2.0, 8.0);
      for (int i = 0; i < k; ++i) out.push_back(c + Vec3(0, 0, rng.uniform(0.0, h)));
    } else {  // horizontal edge
      const double len = rng.uniform(2.0, 8.0), z = rng.uniform(0.5, 4.0);
      for (int i = 0; i < k; ++i) {
        out.push_back(c + dir * rng.uniform(-len / 2, len / 2) + Vec3(0, 0, z));
      }
    }
  } else {  // blob
    const Vec3 sd(rng.uniform(0.3, 1.5), rng.uniform(0.3, 1.5),
                  rng.uniform(0.3, 1.5));
    const double z = rng.uniform(0.5, 3.0);
    for (int i = 0; i < k; ++i) {
      out.push_back(c + Vec3(sd.x() * rng.normal(), sd.y() * rng.normal(),
                             z + sd.z() * rng.normal()));
    }
  }
}

Mat3 random_rotation(Rng& rng, double max_angle) {
  Vec3 axis(rng.normal(), rng.normal(), rng.normal());
  if (axis.norm() == 0.0) axis = Vec3::UnitZ();
  return rot_axis_angle(axis, rng.uniform(0.0, max_angle));
}

Vec3 random_translation(Rng& rng, double max_norm) {
  Vec3 d(rng.normal(), rng.normal(), rng.normal());
  if (d.norm() == 0.0) return Vec3::Zero();
  return d.normalized() * rng.uniform(0.0, max_norm);
}

void add_noise(Rng& rng, double sigma, PointCloud& cloud) {
  if (sigma <= 0.0) return;
  for (auto& p : cloud.points) {
    p += Vec3(rng.normal(), rng.normal(), rng.normal()) * sigma;
  }
}

// Shuffles points and ids together (Fisher-Yates).
void shuffle_together(Rng& rng, PointCloud& cloud, std::vector<std::size_t>& ids) {
  for (std::size_t i = cloud.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(cloud.points[i - 1], cloud.points[j]);
    std::swap(ids[i - 1], ids[j]);
  }
}

}  // namespace

void SceneSpec::validate() const {
  const double s = surface_mix.planes + surface_mix.edges + surface_mix.scatter;
  if (surface_mix.planes < 0 || surface_mix.edges < 0 ||
      surface_mix.scatter < 0 || std::abs(s - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument,
                "surface mix fractions must be nonnegative and sum to 1");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "dropout must lie in [0, 1)");
  }
  if (n_landmarks < 1 || frames < 1 || !(extent > 0) || !(noise_sigma >= 0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "scene needs landmarks, frames, extent > 0 and noise >= 0");
  }
  for (const auto& seg : speed_profile) {
    if (seg.last_frame < seg.first_frame) {
      throw Error(ErrorCode::kInvalidArgument, "speed segment range reversed");
    }
  }
}

std::vector<Vec3> generate_landmarks(std::uint64_t seed, int n, double extent,
                                     const SurfaceMix& mix,
                                     std::vector<int>* object_ids) {
  Rng rng(mix_seed(seed, 0));
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(n) + 48);
  int object = 0;
  while (out.size() < static_cast<std::size_t>(n)) {
    append_object(rng, mix, extent, out);
    if (object_ids) object_ids->resize(out.size(), object);
    ++object;
  }
  out.resize(static_cast<std::size_t>(n));
  if (object_ids) object_ids->resize(out.size());
  return out;
}

SyntheticSequence generate_sequence(const SceneSpec& spec) {
  spec.validate();
  const std::vector<Vec3> landmarks =
      generate_landmarks(spec.seed, spec.n_landmarks, spec.extent, spec.surface_mix);

  std::vector<Pose> poses(static_cast<std::size_t>(spec.frames));
  for (int f = 1; f < spec.frames; ++f) {
    Pose step;
    for (const auto& seg : spec.speed_profile) {
      if (f - 1 >= seg.first_frame && f - 1 <= seg.last_frame) {
        step.rotation = rot_z(seg.yaw_rate_deg * kDeg);
        step.translation = Vec3(seg.meters_per_frame, 0.0, 0.0);
        break;
      }
    }
    poses[f] = poses[f - 1] * step;
  }

  SyntheticSequence seq;
  seq.scans.resize(poses.size());
  seq.landmark_ids.resize(poses.size());
  for (std::size_t f = 0; f < poses.size(); ++f) {
    Rng rng(mix_seed(spec.seed, f + 1));
    const Pose inv = poses[f].inverse();
    std::vector<std::size_t> visible;
    std::vector<Vec3> local;
    for (std::size_t i = 0; i < landmarks.size(); ++i) {
      const Vec3 p = inv * landmarks[i];
      if (p.norm() <= kSensorRange) {
        visible.push_back(i);
        local.push_back(p);
      }
    }
    const auto drop = static_cast<std::size_t>(
        std::floor(spec.dropout * static_cast<double>(visible.size())));
    std::vector<char> removed(visible.size(), 0);
    std::vector<std::size_t> order(visible.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t d = 0; d < drop; ++d) {
      const std::size_t j = d + rng.below(order.size() - d);
      std::swap(order[d], order[j]);
      removed[order[d]] = 1;
    }
    PointCloud& scan = seq.scans[f];
    for (std::size_t i = 0; i < visible.size(); ++i) {
      if (removed[i]) continue;
      scan.points.push_back(local[i]);
      seq.landmark_ids[f].push_back(visible[i]);
    }
    add_noise(rng, spec.noise_sigma, scan);
  }
  seq.gt = Trajectory::from_poses(std::move(poses));
  return seq;
}

void perturb_scans(std::vector<PointCloud>& scans, int first, int last,
                   double sigma, std::uint64_t seed) {
  if (first < 0 || last < first || !(sigma >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bad perturbation range or sigma");
  }
  const auto end = std::min(static_cast<std::size_t>(last) + 1, scans.size());
  for (auto f = static_cast<std::size_t>(first); f < end; ++f) {
    Rng rng(mix_seed(seed, 0x5eed0000ULL + f));
    add_noise(rng, sigma, scans[f]);
  }
}

double shared_fraction(const std::vector<std::size_t>& a,
                       const std::vector<std::size_t>& b) {
  if (a.empty()) return 0.0;
  const std::unordered_set<std::size_t> in_b(b.begin(), b.end());
  std::size_t shared = 0;
  for (auto id : a) shared += in_b.count(id);
  return static_cast<double>(shared) / static_cast<double>(a.size());
}

SyntheticPair generate_pair(const PairSpec& spec) {
  if (spec.points < 3 || !(spec.overlap > 0.0 && spec.overlap <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "pair needs >= 3 points and overlap in (0, 1]");
  }
  const auto n = static_cast<std::size_t>(spec.points);
  const auto shared = static_cast<std::size_t>(
      std::llround(spec.overlap * static_cast<double>(n)));
  const std::size_t unique = n - shared;
  const std::size_t total = shared + 2 * unique;

  std::vector<int> objects;
  const std::vector<Vec3> world = generate_landmarks(
      spec.seed, static_cast<int>(total), spec.extent, spec.surface_mix,
      &objects);
  Rng rng(mix_seed(spec.seed, 1));

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  if (spec.mode == OverlapMode::kSpatial) {
    const double th = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const Vec3 d(std::cos(th), std::sin(th), 0.0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return world[a].dot(d) < world[b].dot(d);
    });
  } else if (spec.mode == OverlapMode::kSubset) {
    for (std::size_t i = total; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  } else {
    // Shuffle whole objects, then lay their points out contiguously.
    const int n_obj = objects.back() + 1;
    std::vector<int> obj_order(static_cast<std::size_t>(n_obj));
    std::iota(obj_order.begin(), obj_order.end(), 0);
    for (std::size_t i = obj_order.size(); i > 1; --i) {
      std::swap(obj_order[i - 1], obj_order[rng.below(i)]);
    }
    std::vector<int> rank(static_cast<std::size_t>(n_obj));
    for (int r = 0; r < n_obj; ++r) rank[obj_order[r]] = r;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return rank[objects[a]] < rank[objects[b]];
    });
  }

  SyntheticPair pair;
  pair.gt.rotation = random_rotation(rng, spec.max_rotation_deg * kDeg);
  pair.gt.translation = random_translation(rng, spec.max_translation);

  // Source takes order[0, n), target takes order[unique, unique + n).
  for (std::size_t i = 0; i < n; ++i) {
    pair.source.points.push_back(world[order[i]]);
    pair.source_ids.push_back(order[i]);
    pair.target.points.push_back(pair.gt * world[order[unique + i]]);
    pair.target_ids.push_back(order[unique + i]);
  }
  shuffle_together(rng, pair.source, pair.source_ids);
  shuffle_together(rng, pair.target, pair.target_ids);
  add_noise(rng, spec.noise_sigma, pair.source);
  add_noise(rng, spec.noise_sigma, pair.target);
  return pair;
}

}  // namespace evlo
