#include "evlo/io_formats.hpp"

#include <Eigen/LU>
#include <bit>
#include <cstring>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "evlo/error.hpp"
#include "evlo/rng.hpp"
#include "evlo/text_io.hpp"

namespace evlo {

namespace {

[[noreturn]] void parse_error(int line_no, std::size_t column, const std::string& what) {
  throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ", column " +
                                          std::to_string(column) + ": " + what);
}

std::size_t column_of(std::string_view line, std::string_view token) {
  return static_cast<std::size_t>(token.data() - line.data()) + 1;
}

Pose checked_pose(const Pose& raw, int line_no) {
  const double err = raw.orthonormality_error();
  if (err >= kRepairTolerance || raw.rotation.determinant() <= 0.0) {
    throw Error(ErrorCode::kNonRigid, "line " + std::to_string(line_no) +
                                          ": rotation is not rigid (orthonormality error " +
                                          format_double(err) + ")");
  }
  // Rounding-level error is left alone so files round-trip unchanged.
  if (err <= 1e-12) return raw;
  return {nearest_rotation(raw.rotation), raw.translation};
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ifstream in(path, std::ios::in | mode);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ofstream out(path, std::ios::out | std::ios::trunc | mode);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path.string() + "'");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "write failed for '" + path.string() + "'");
}

bool parse_bool(std::string_view v, int line_no) {
  if (v == "true") return true;
  if (v == "false") return false;
  parse_error(line_no, 1, "expected true or false, got '" + std::string(v) + "'");
}

int parse_int(std::string_view v, int line_no) {
  const long x = parse_long(v, line_no);
  if (x < -2147483647L || x > 2147483647L) parse_error(line_no, 1, "integer out of range");
  return static_cast<int>(x);
}

Vec6 parse_sigma(std::string_view v, int line_no) {
  const auto vals = parse_doubles(v, line_no);
  if (vals.size() != 6) parse_error(line_no, 1, "sigma needs 6 values");
  Vec6 s;
  for (int i = 0; i < 6; ++i) s[i] = vals[static_cast<std::size_t>(i)];
  s.head<3>() *= std::numbers::pi / 180.0;
  return s;
}

std::string format_sigma(const Vec6& s) {
  std::string out;
  for (int i = 0; i < 6; ++i) {
    const double v = i < 3 ? s[i] * 180.0 / std::numbers::pi : s[i];
    out += (i ? " " : "") + format_double(v);
  }
  return out;
}

}  // namespace

Trajectory read_kitti_poses(std::istream& in) {
  std::vector<Pose> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto tok = split_whitespace(line);
    if (tok.size() != 12) {
      parse_error(line_no, tok.size() > 12 ? column_of(line, tok[12]) : line.size() + 1,
                  "expected 12 values, found " + std::to_string(tok.size()));
    }
    Pose p;
    for (int i = 0; i < 12; ++i) {
      const auto t = tok[static_cast<std::size_t>(i)];
      double v = 0.0;
      try {
        v = parse_double(t, line_no);
      } catch (const Error&) {
        parse_error(line_no, column_of(line, t),
                    "cannot parse '" + std::string(t) + "' as a finite number");
      }
      if (i % 4 == 3) {
        p.translation[i / 4] = v;
      } else {
        p.rotation(i / 4, i % 4) = v;
      }
    }
    poses.push_back(checked_pose(p, line_no));
  }
  return Trajectory::from_poses(std::move(poses));
}

Trajectory read_kitti_poses(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_kitti_poses(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + std::string(e.what()).substr(e.name().size() + 2));
  }
}

void write_kitti_poses(std::ostream& out, const Trajectory& t) {
  for (const auto& p : t.poses) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        out << format_double(p.rotation(r, c)) << ' ';
      }
      out << format_double(p.translation[r]) << (r == 2 ? '\n' : ' ');
    }
  }
}

void write_kitti_poses(const std::filesystem::path& path, const Trajectory& t) {
  auto out = open_out(path);
  write_kitti_poses(out, t);
  finish(out, path);
}

namespace {

float load_le_float(const unsigned char* p) {
  std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                       (static_cast<std::uint32_t>(p[1]) << 8) |
                       (static_cast<std::uint32_t>(p[2]) << 16) |
                       (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

void store_le_float(float v, unsigned char* p) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>(bits >> (8 * i));
}

}  // namespace

PointCloud read_velodyne_bin(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() % 16 != 0) {
    throw Error(ErrorCode::kTruncatedRecord,
                path.string() + ": " + std::to_string(bytes.size()) +
                    " bytes is not a whole number of 16-byte records");
  }
  PointCloud cloud;
  const std::size_t n = bytes.size() / 16;
  cloud.points.resize(n);
  cloud.intensity.emplace(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* r = bytes.data() + 16 * i;
    cloud.points[i] = Vec3(load_le_float(r), load_le_float(r + 4), load_le_float(r + 8));
    (*cloud.intensity)[i] = load_le_float(r + 12);
  }
  return cloud;
}

void write_velodyne_bin(const std::filesystem::path& path, const PointCloud& cloud) {
  cloud.validate();
  std::vector<unsigned char> bytes(16 * cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    unsigned char* r = bytes.data() + 16 * i;
    for (int d = 0; d < 3; ++d) {
      store_le_float(static_cast<float>(cloud.points[i][d]), r + 4 * d);
    }
    store_le_float(cloud.intensity ? static_cast<float>((*cloud.intensity)[i]) : 0.0f,
                   r + 12);
  }
  auto out = open_out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  finish(out, path);
}

PointCloud subsample(const PointCloud& cloud, std::size_t n, std::uint64_t seed) {
  if (cloud.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot subsample an empty cloud");
  Rng rng(seed);
  const std::size_t size = cloud.size();
  std::vector<std::size_t> picks(n);
  if (size >= n) {
    std::vector<std::size_t> order(size);
    for (std::size_t i = 0; i < size; ++i) order[i] = i;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(size - i));
      std::swap(order[i], order[j]);
      picks[i] = order[i];
    }
  } else {
    for (auto& p : picks) p = static_cast<std::size_t>(rng.below(size));
  }
  PointCloud out;
  out.points.reserve(n);
  for (std::size_t p : picks) out.points.push_back(cloud.points[p]);
  if (cloud.intensity) {
    out.intensity.emplace();
    out.intensity->reserve(n);
    for (std::size_t p : picks) out.intensity->push_back((*cloud.intensity)[p]);
  }
  return out;
}

void RunConfig::validate() const {
  pot.validate();
  gate.validate();
  if (descriptor_k < 4) throw Error(ErrorCode::kInvalidArgument, "descriptor.k must be >= 4");
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "descriptor.temperature must be positive");
  }
  if (sample_points < descriptor_k + 1) {
    throw Error(ErrorCode::kInvalidArgument, "sample_points must be >= descriptor.k + 1");
  }
  information_from_sigma(sigma_odom);
  information_from_sigma(sigma_key);
  if (optimizer.max_iters < 0 || !(optimizer.tol >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bad optimizer settings");
  }
}

RunConfig parse_run_config(std::istream& in) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) {
      body = body.substr(0, hash);
    }
    if (trim(body).empty()) continue;
    const auto [key, value] = split_key_value(body, line_no);
    if (!seen.insert(key).second) parse_error(line_no, 1, "repeated key '" + key + "'");
    if (key == "pot.mass") {
      cfg.pot.mass = parse_double(value, line_no);
    } else if (key == "pot.iterations") {
      cfg.pot.iterations = parse_int(value, line_no);
    } else if (key == "pot.regularizer") {
      cfg.pot.regularizer = parse_double(value, line_no);
    } else if (key == "pot.scaling") {
      if (value == "dykstra") {
        cfg.pot.scaling = PotScaling::kDykstra;
      } else if (value == "alternating") {
        cfg.pot.scaling = PotScaling::kAlternating;
      } else {
        parse_error(line_no, 1, "pot.scaling must be dykstra or alternating");
      }
    } else if (key == "pot.allow_log_domain") {
      cfg.pot.allow_log_domain = parse_bool(value, line_no);
    } else if (key == "pot.force_log_domain") {
      cfg.pot.force_log_domain = parse_bool(value, line_no);
    } else if (key == "pot.early_exit") {
      cfg.pot.early_exit = parse_bool(value, line_no);
    } else if (key == "gate.theta_min") {
      cfg.gate.theta_min = parse_double(value, line_no);
    } else if (key == "gate.theta_max") {
      cfg.gate.theta_max = parse_double(value, line_no);
    } else if (key == "gate.odometry_factor") {
      cfg.gate.odometry_factor = parse_int(value, line_no);
    } else if (key == "gate.keyframe_factor") {
      cfg.gate.keyframe_factor = parse_int(value, line_no);
    } else if (key == "descriptor.k") {
      cfg.descriptor_k = parse_int(value, line_no);
    } else if (key == "descriptor.temperature") {
      cfg.temperature = parse_double(value, line_no);
    } else if (key == "sample_points") {
      cfg.sample_points = parse_int(value, line_no);
    } else if (key == "seed") {
      const long s = parse_long(value, line_no);
      if (s < 0) parse_error(line_no, 1, "seed must be non-negative");
      cfg.seed = static_cast<std::uint64_t>(s);
    } else if (key == "sigma_odom") {
      cfg.sigma_odom = parse_sigma(value, line_no);
    } else if (key == "sigma_key") {
      cfg.sigma_key = parse_sigma(value, line_no);
    } else if (key == "optimizer.max_iters") {
      cfg.optimizer.max_iters = parse_int(value, line_no);
    } else if (key == "optimizer.tol") {
      cfg.optimizer.tol = parse_double(value, line_no);
    } else {
      parse_error(line_no, 1, "unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig read_run_config(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_run_config(in);
}

void write_run_config(std::ostream& out, const RunConfig& cfg) {
  auto b = [](bool v) { return v ? "true" : "false"; };
  out << "pot.mass = " << format_double(cfg.pot.mass) << '\n'
      << "pot.iterations = " << cfg.pot.iterations << '\n'
      << "pot.regularizer = " << format_double(cfg.pot.regularizer) << '\n'
      << "pot.scaling = "
      << (cfg.pot.scaling == PotScaling::kDykstra ? "dykstra" : "alternating") << '\n'
      << "pot.allow_log_domain = " << b(cfg.pot.allow_log_domain) << '\n'
      << "pot.force_log_domain = " << b(cfg.pot.force_log_domain) << '\n'
      << "pot.early_exit = " << b(cfg.pot.early_exit) << '\n'
      << "gate.theta_min = " << format_double(cfg.gate.theta_min) << '\n'
      << "gate.theta_max = " << format_double(cfg.gate.theta_max) << '\n'
      << "gate.odometry_factor = " << cfg.gate.odometry_factor << '\n'
      << "gate.keyframe_factor = " << cfg.gate.keyframe_factor << '\n'
      << "descriptor.k = " << cfg.descriptor_k << '\n'
      << "descriptor.temperature = " << format_double(cfg.temperature) << '\n'
      << "sample_points = " << cfg.sample_points << '\n'
      << "seed = " << cfg.seed << '\n'
      << "sigma_odom = " << format_sigma(cfg.sigma_odom) << '\n'
      << "sigma_key = " << format_sigma(cfg.sigma_key) << '\n'
      << "optimizer.max_iters = " << cfg.optimizer.max_iters << '\n'
      << "optimizer.tol = " << format_double(cfg.optimizer.tol) << '\n';
}

void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
  out << "frame_id,r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz\n";
  for (std::size_t i = 0; i < t.size(); ++i) {
    out << t.frame_ids[i];
    const Pose& p = t.poses[i];
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out << ',' << format_double(p.rotation(r, c));
    }
    for (int r = 0; r < 3; ++r) out << ',' << format_double(p.translation[r]);
    out << '\n';
  }
}

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line) ||
      trim(line) != "frame_id,r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz") {
    parse_error(1, 1, "missing trajectory CSV header");
  }
  std::vector<Pose> poses;
  std::vector<long> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto tok = split_char(line, ',');
    if (tok.size() != 13) {
      parse_error(line_no, 1, "expected 13 fields, found " + std::to_string(tok.size()));
    }
    ids.push_back(parse_long(tok[0], line_no));
    Pose p;
    for (int k = 0; k < 9; ++k) {
      p.rotation(k / 3, k % 3) = parse_double(tok[static_cast<std::size_t>(1 + k)], line_no);
    }
    for (int k = 0; k < 3; ++k) {
      p.translation[k] = parse_double(tok[static_cast<std::size_t>(10 + k)], line_no);
    }
    poses.push_back(checked_pose(p, line_no));
  }
  return Trajectory::from_poses(std::move(poses), std::move(ids));
}

std::string read_text_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path, std::ios::binary);
  out << text;
  finish(out, path);
}

}  // namespace evlo
