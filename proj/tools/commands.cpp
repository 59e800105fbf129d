#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "evlo/error.hpp"
#include "evlo/evidential.hpp"
#include "evlo/metrics.hpp"
#include "evlo/pose_graph.hpp"
#include "evlo/synth.hpp"
#include "evlo/text_io.hpp"

namespace fs = std::filesystem;

namespace evlo::cli {

namespace {

std::string absolute(const std::string& p) {
  return p.empty() ? p : fs::absolute(p).lexically_normal().string();
}

std::string pose_fields(const Pose& p, char sep) {
  std::string s;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) s += format_double(p.rotation(r, c)) + sep;
    s += format_double(p.translation[r]);
    if (r < 2) s += sep;
  }
  return s;
}

PointCloud load_scan(const std::string& path, const RunConfig& cfg) {
  PointCloud c = read_velodyne_bin(path);
  if (c.size() > static_cast<std::size_t>(cfg.sample_points)) {
    c = subsample(c, static_cast<std::size_t>(cfg.sample_points), cfg.seed);
  }
  return c;
}

RegistrationOptions registration_options(const RunConfig& cfg) {
  RegistrationOptions o;
  o.pot = cfg.pot;
  o.descriptor_k = cfg.descriptor_k;
  o.temperature = cfg.temperature;
  return o;
}

double rotation_angle_deg(const Mat3& r) {
  return angular_deviation(Mat3::Identity(), r);
}

std::vector<double> parse_fields(const std::string& spec, std::size_t count,
                                 const char* what) {
  std::vector<double> v;
  for (auto tok : split_char(spec, ':')) v.push_back(parse_double(tok, 0));
  if (v.size() != count) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(what) + " expects " + std::to_string(count) +
                    " ':'-separated values, got '" + spec + "'");
  }
  return v;
}

std::vector<Vec6> read_confidences(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::vector<Vec6> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line).starts_with('#')) continue;
    const auto v = parse_doubles(line, line_no);
    if (v.size() != 6) {
      throw Error(ErrorCode::kParseError, path + ": line " + std::to_string(line_no) +
                                              ": expected 6 confidences");
    }
    out.push_back(Vec6(v.data()));
  }
  return out;
}

void write_lines(const std::string& path, const std::string& text) {
  write_text_file(path, text);
}

}  // namespace

Eigen::VectorXd registration_features(double mean_residual,
                                      double matched_fraction, const Pose& rel) {
  Eigen::VectorXd f(4);
  f << 100.0 * mean_residual, matched_fraction, rotation_angle_deg(rel.rotation),
      rel.translation.norm();
  return f;
}

void Manifest::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : args) {
    if (k == key) {
      v = value;
      return;
    }
  }
  args.emplace_back(key, value);
}

std::string Manifest::get(const std::string& key) const {
  for (const auto& [k, v] : args) {
    if (k == key) return v;
  }
  return {};
}

void Manifest::write(const fs::path& path) const {
  std::ostringstream out;
  out << "command = " << command << '\n';
  for (const auto& [k, v] : args) out << "arg." << k << " = " << v << '\n';
  out << "[config]\n";
  write_run_config(out, config);
  if (!frames_header.empty()) {
    out << "[frames]\n" << frames_header << '\n';
    for (const auto& row : frames) out << row << '\n';
  }
  write_text_file(path, out.str());
}

Manifest Manifest::read(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  Manifest m;
  std::string line, config_text;
  int section = 0;  // 0 header, 1 config, 2 frames
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line == "[config]") {
      section = 1;
      continue;
    }
    if (line == "[frames]") {
      section = 2;
      continue;
    }
    if (section == 1) {
      config_text += line + '\n';
    } else if (section == 2) {
      if (m.frames_header.empty()) {
        m.frames_header = line;
      } else if (!trim(line).empty()) {
        m.frames.push_back(line);
      }
    } else if (!trim(line).empty()) {
      auto [k, v] = split_key_value(line, line_no);
      if (k == "command") {
        m.command = v;
      } else if (k.starts_with("arg.")) {
        m.args.emplace_back(k.substr(4), v);
      } else {
        throw Error(ErrorCode::kParseError, path.string() + ": line " +
                                                std::to_string(line_no) +
                                                ": unexpected key '" + k + "'");
      }
    }
  }
  if (m.command.empty()) {
    throw Error(ErrorCode::kParseError, path.string() + ": missing command");
  }
  std::istringstream cfg_in(config_text);
  m.config = parse_run_config(cfg_in);
  return m;
}

int cmd_register(const RegisterArgs& a, const RunConfig& cfg, std::ostream& out) {
  const PointCloud source = load_scan(a.source, cfg);
  const PointCloud target = load_scan(a.target, cfg);
  const RegistrationResult r = register_pair(source, target, registration_options(cfg));
  out << "pose\n";
  for (int row = 0; row < 3; ++row) {
    for (int c = 0; c < 3; ++c) out << format_double(r.pose.rotation(row, c)) << ' ';
    out << format_double(r.pose.translation[row]) << '\n';
  }
  out << "matched_fraction = " << format_double(r.matched_fraction) << '\n'
      << "mean_residual = " << format_double(r.mean_residual) << '\n'
      << "log_domain = " << (r.log_domain ? "true" : "false") << '\n';
  if (!a.gt.empty()) {
    const Trajectory gt = read_kitti_poses(a.gt);
    if (gt.empty()) throw Error(ErrorCode::kParseError, a.gt + ": no pose");
    out << "phi_deg = "
        << format_double(angular_deviation(gt.poses[0].rotation, r.pose.rotation)) << '\n'
        << "dt_m = "
        << format_double(translation_error(gt.poses[0].translation, r.pose.translation))
        << '\n';
  }
  out << "descriptors_ms = " << r.timings.descriptors_ms << '\n'
      << "cost_ms = " << r.timings.cost_ms << '\n'
      << "transport_ms = " << r.timings.transport_ms << '\n'
      << "procrustes_ms = " << r.timings.procrustes_ms << '\n';
  return kExitOk;
}

int cmd_odometry(const OdometryArgs& a, const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  if (!fs::is_directory(a.scan_dir)) {
    throw Error(ErrorCode::kIoError, "not a directory: '" + a.scan_dir + "'");
  }
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(a.scan_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".bin") {
      files.push_back(e.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  const int o = cfg.gate.odometry_factor;
  if (files.size() < static_cast<std::size_t>(o) + 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "need at least " + std::to_string(o + 1) + " scans in '" + a.scan_dir + "'");
  }
  if (!a.confidence_output.empty() && a.head.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "confidence output needs an evidential head");
  }
  EvidentialPoseModel model;
  if (!a.head.empty()) {
    std::istringstream in(read_text_file(a.head));
    model = EvidentialPoseModel::read(in);
  }

  Manifest m;
  m.command = "odometry";
  m.config = cfg;
  const std::string manifest_path = a.manifest.empty() ? a.output + ".manifest" : a.manifest;
  const std::string timings_path = manifest_path + ".timings.csv";
  m.set("scan_dir", absolute(a.scan_dir));
  m.set("output", absolute(a.output));
  m.set("manifest", absolute(manifest_path));
  m.set("head", absolute(a.head));
  m.set("confidence_output", absolute(a.confidence_output));
  m.set("strict", a.strict ? "true" : "false");
  m.set("timings", absolute(timings_path));
  m.frames_header =
      "frame,next_frame,status,r00,r01,r02,tx,r10,r11,r12,ty,r20,r21,r22,tz,"
      "mean_residual,matched_fraction,conf_rx,conf_ry,conf_rz,conf_tx,conf_ty,conf_tz";
  std::string timings = "frame,descriptors_ms,cost_ms,transport_ms,procrustes_ms\n";

  const RegistrationOptions opts = registration_options(cfg);
  std::vector<Pose> nodes{Pose::identity()};
  std::vector<long> ids{0};
  std::vector<Vec6> pair_conf;
  PoseChain chain;
  Pose previous = Pose::identity();
  int flagged = 0;
  for (std::size_t f = 0; f + static_cast<std::size_t>(o) < files.size(); f += static_cast<std::size_t>(o)) {
    const std::size_t g = f + static_cast<std::size_t>(o);
    std::string status = "ok";
    Pose rel = previous;
    RegistrationResult r;
    try {
      // The later scan is the source: its points map into frame f.
      r = register_pair(load_scan(files[g], cfg), load_scan(files[f], cfg), opts);
      rel = r.pose;
    } catch (const Error& e) {
      status = std::string(e.name());
      ++flagged;
      out << "frame " << g << " flagged: " << e.what() << '\n';
      r = RegistrationResult{};
      r.pose = rel;
    }
    Vec6 conf = Vec6::Constant(std::numeric_limits<double>::quiet_NaN());
    if (!a.head.empty()) {
      conf = summarize(model.predict(
                           registration_features(r.mean_residual, r.matched_fraction, rel)))
                 .confidence;
    }
    pair_conf.push_back(conf);
    previous = rel;
    nodes.push_back(chain.append(rel));
    ids.push_back(static_cast<long>(g));
    std::string row = std::to_string(f) + ',' + std::to_string(g) + ',' + status + ',' +
                      pose_fields(rel, ',') + ',' + format_double(r.mean_residual) + ',' +
                      format_double(r.matched_fraction);
    for (int k = 0; k < 6; ++k) row += ',' + format_double(conf[k]);
    m.frames.push_back(row);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%zu,%.3f,%.3f,%.3f,%.3f\n", f, r.timings.descriptors_ms,
                  r.timings.cost_ms, r.timings.transport_ms, r.timings.procrustes_ms);
    timings += buf;
  }

  write_kitti_poses(a.output, Trajectory::from_poses(nodes));
  if (!a.confidence_output.empty()) {
    const std::size_t per_span =
        static_cast<std::size_t>(cfg.gate.keyframe_factor / cfg.gate.odometry_factor);
    const std::size_t spans = static_cast<std::size_t>(ids.back() / cfg.gate.keyframe_factor);
    std::string text;
    for (std::size_t k = 0; k < spans; ++k) {
      Vec6 c = pair_conf[k * per_span];
      for (std::size_t j = 1; j < per_span; ++j) c = c.cwiseMin(pair_conf[k * per_span + j]);
      for (int d = 0; d < 6; ++d) text += (d ? " " : "") + format_double(c[d]);
      text += '\n';
    }
    write_lines(a.confidence_output, text);
  }
  m.write(manifest_path);
  write_text_file(timings_path, timings);
  out << "frames = " << files.size() << "\nnodes = " << nodes.size()
      << "\nflagged = " << flagged << '\n';
  return a.strict && flagged > 0 ? kExitFlagged : kExitOk;
}

int cmd_fit_evidence(const FitEvidenceArgs& a, const RunConfig& cfg, std::ostream& out) {
  const Manifest run = Manifest::read(a.odometry_manifest);
  if (run.command != "odometry") {
    throw Error(ErrorCode::kInvalidArgument,
                a.odometry_manifest + " is not an odometry manifest");
  }
  if (!(a.train_fraction > 0.0 && a.train_fraction <= 1.0) || a.epochs < 1) {
    throw Error(ErrorCode::kInvalidArgument, "bad training fraction or epoch count");
  }
  const Trajectory gt = read_kitti_poses(a.gt);
  std::vector<Eigen::VectorXd> features;
  std::vector<Vec6> targets;
  int line_no = 0;
  for (const auto& row : run.frames) {
    ++line_no;
    const auto tok = split_char(row, ',');
    if (tok.size() != 23) {
      throw Error(ErrorCode::kParseError, "frame row " + std::to_string(line_no) +
                                              ": expected 23 fields");
    }
    if (tok[2] != "ok") continue;
    const long f = parse_long(tok[0], line_no), g = parse_long(tok[1], line_no);
    if (f < 0 || g >= static_cast<long>(gt.size())) {
      throw Error(ErrorCode::kMisalignedInputs,
                  "frame " + std::to_string(g) + " has no ground-truth pose");
    }
    Pose rel;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        rel.rotation(r, c) = parse_double(tok[static_cast<std::size_t>(3 + 4 * r + c)], line_no);
      }
      rel.translation[r] = parse_double(tok[static_cast<std::size_t>(6 + 4 * r)], line_no);
    }
    const Pose gt_rel = gt.poses[static_cast<std::size_t>(f)].inverse() *
                        gt.poses[static_cast<std::size_t>(g)];
    features.push_back(registration_features(parse_double(tok[15], line_no),
                                             parse_double(tok[16], line_no), rel));
    targets.push_back(vec6_from_pose(rel.inverse() * gt_rel).as_vector());
  }
  const auto n_train = static_cast<std::size_t>(
      std::ceil(a.train_fraction * static_cast<double>(features.size())));
  FitOptions fo;
  fo.epochs = a.epochs;
  EvidentialPoseModel model;
  for (int k = 0; k < 6; ++k) {
    std::vector<EvidentialSample> samples;
    for (std::size_t i = 0; i < n_train; ++i) samples.push_back({features[i], targets[i][k]});
    model.heads[static_cast<std::size_t>(k)] = fit_evidential(samples, fo);
  }
  std::ostringstream text;
  model.write(text);
  write_text_file(a.output, text.str());

  Manifest m;
  m.command = "fit-evidence";
  m.config = cfg;
  m.set("odometry_manifest", absolute(a.odometry_manifest));
  m.set("gt", absolute(a.gt));
  m.set("output", absolute(a.output));
  const std::string manifest_path = a.manifest.empty() ? a.output + ".manifest" : a.manifest;
  m.set("manifest", absolute(manifest_path));
  m.set("train_fraction", format_double(a.train_fraction));
  m.set("epochs", std::to_string(a.epochs));
  m.write(manifest_path);
  out << "samples = " << features.size() << "\ntrained_on = " << n_train << '\n';
  for (int k = 0; k < 6; ++k) {
    const auto& h = model.heads[static_cast<std::size_t>(k)].loss_history();
    out << "axis " << k << " final_loss = " << format_double(h.empty() ? 0.0 : h.back()) << '\n';
  }
  return kExitOk;
}

int cmd_refine(const RefineArgs& a, const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const Trajectory traj = read_kitti_poses(a.trajectory);
  const std::vector<Vec6> conf = read_confidences(a.confidences);
  std::vector<GraphNode> nodes;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    nodes.push_back({static_cast<long>(i) * cfg.gate.odometry_factor, traj.poses[i]});
  }
  std::vector<Pose> key;
  if (!a.keyframes.empty()) key = read_kitti_poses(a.keyframes).poses;
  const PoseGraph graph = build_graph(nodes, conf, cfg.gate, cfg.sigma_odom, cfg.sigma_key,
                                      a.keyframes.empty() ? nullptr : &key);
  const OptimizeResult result = optimize(graph, cfg.optimizer);
  std::vector<Pose> refined;
  for (const auto& n : result.graph.nodes) refined.push_back(n.pose);
  write_kitti_poses(a.output, Trajectory::from_poses(refined));
  if (!a.graph_output.empty()) {
    std::ostringstream g;
    write_graph(g, result.graph);
    write_text_file(a.graph_output, g.str());
  }

  Manifest m;
  m.command = "refine";
  m.config = cfg;
  m.set("trajectory", absolute(a.trajectory));
  m.set("confidences", absolute(a.confidences));
  m.set("output", absolute(a.output));
  m.set("keyframes", absolute(a.keyframes));
  m.set("graph_output", absolute(a.graph_output));
  const std::string manifest_path = a.manifest.empty() ? a.output + ".manifest" : a.manifest;
  m.set("manifest", absolute(manifest_path));
  m.write(manifest_path);

  const std::size_t gated_in = graph.keyframe_factor_count();
  out << "factors total = " << graph.factors.size() << '\n'
      << "keyframe gated_in = " << gated_in << '\n'
      << "keyframe gated_out = " << conf.size() - gated_in << '\n'
      << "iterations = " << result.iterations << '\n'
      << "error_initial = " << format_double(result.error_history.front()) << '\n'
      << "error_final = " << format_double(result.error_history.back()) << '\n';
  return kExitOk;
}

namespace {

std::string trajectory_svg(const Trajectory& gt, const Trajectory& est) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto* t : {&gt, &est}) {
    for (const auto& p : t->poses) {
      xmin = std::min(xmin, p.translation.x());
      xmax = std::max(xmax, p.translation.x());
      ymin = std::min(ymin, p.translation.y());
      ymax = std::max(ymax, p.translation.y());
    }
  }
  const double size = 600.0, margin = 40.0;
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-9});
  const double scale = (size - 2.0 * margin) / span;
  auto points = [&](const Trajectory& t) {
    std::string s;
    char buf[64];
    for (const auto& p : t.poses) {
      std::snprintf(buf, sizeof(buf), "%.3f,%.3f ", margin + (p.translation.x() - xmin) * scale,
                    size - margin - (p.translation.y() - ymin) * scale);
      s += buf;
    }
    if (!s.empty()) s.pop_back();
    return s;
  };
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" "
         "viewBox=\"0 0 600 600\">\n"
      << "<rect width=\"600\" height=\"600\" fill=\"white\"/>\n"
      << "<polyline id=\"ground_truth\" fill=\"none\" stroke=\"black\" stroke-width=\"2\" "
         "points=\""
      << points(gt) << "\"/>\n"
      << "<polyline id=\"estimate\" fill=\"none\" stroke=\"red\" stroke-width=\"1.5\" "
         "points=\""
      << points(est) << "\"/>\n"
      << "<g font-family=\"sans-serif\" font-size=\"14\">\n"
      << "<line x1=\"20\" y1=\"20\" x2=\"50\" y2=\"20\" stroke=\"black\" stroke-width=\"2\"/>\n"
      << "<text x=\"56\" y=\"25\">ground truth</text>\n"
      << "<line x1=\"20\" y1=\"40\" x2=\"50\" y2=\"40\" stroke=\"red\" stroke-width=\"1.5\"/>\n"
      << "<text x=\"56\" y=\"45\">estimate</text>\n"
      << "</g>\n</svg>\n";
  return svg.str();
}

}  // namespace

int cmd_evaluate(const EvaluateArgs& a, const RunConfig& cfg, std::ostream& out) {
  if (a.gt_step < 1) throw Error(ErrorCode::kInvalidArgument, "gt step must be >= 1");
  const Trajectory full = read_kitti_poses(a.gt);
  std::vector<Pose> picked;
  for (std::size_t i = 0; i < full.size(); i += static_cast<std::size_t>(a.gt_step)) {
    picked.push_back(full.poses[i]);
  }
  const Trajectory gt = Trajectory::from_poses(picked);
  const Trajectory est = read_kitti_poses(a.estimate);
  if (gt.size() != est.size()) {
    throw Error(ErrorCode::kMisalignedInputs,
                "ground truth has " + std::to_string(gt.size()) + " poses, estimate has " +
                    std::to_string(est.size()));
  }
  const DriftReport report = kitti_drift(gt, est);
  std::ostringstream csv;
  write_drift_csv(csv, report);
  if (a.csv.empty()) {
    out << csv.str();
  } else {
    write_text_file(a.csv, csv.str());
    out << "rre_deg_per_100m = " << format_double(report.rre_deg_per_100m) << '\n'
        << "rte_percent = " << format_double(report.rte_percent) << '\n';
  }
  if (!a.svg.empty()) write_text_file(a.svg, trajectory_svg(gt, est));

  const std::string manifest_path =
      !a.manifest.empty() ? a.manifest : (a.csv.empty() ? "" : a.csv + ".manifest");
  if (!manifest_path.empty()) {
    Manifest m;
    m.command = "evaluate";
    m.config = cfg;
    m.set("gt", absolute(a.gt));
    m.set("estimate", absolute(a.estimate));
    m.set("csv", absolute(a.csv));
    m.set("svg", absolute(a.svg));
    m.set("gt_step", std::to_string(a.gt_step));
    m.set("manifest", absolute(manifest_path));
    m.write(manifest_path);
  }
  return kExitOk;
}

int cmd_synth(const SynthArgs& a, const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  SceneSpec spec;
  spec.seed = cfg.seed;
  spec.n_landmarks = a.landmarks;
  spec.extent = a.extent;
  spec.noise_sigma = a.noise;
  spec.dropout = a.dropout;
  spec.frames = a.frames;
  if (a.segments.empty()) {
    spec.speed_profile = {{0, a.frames - 1, a.speed, a.yaw}};
  }
  for (const auto& s : a.segments) {
    const auto v = parse_fields(s, 4, "segment");
    spec.speed_profile.push_back(
        {static_cast<int>(v[0]), static_cast<int>(v[1]), v[2], v[3]});
  }
  SyntheticSequence seq = generate_sequence(spec);
  if (!a.degrade.empty()) {
    const auto v = parse_fields(a.degrade, 3, "degrade");
    perturb_scans(seq.scans, static_cast<int>(v[0]), static_cast<int>(v[1]), v[2], cfg.seed);
  }

  const fs::path dir(a.out_dir);
  fs::create_directories(dir / "scans");
  for (std::size_t f = 0; f < seq.scans.size(); ++f) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.bin", f);
    const fs::path p = dir / "scans" / name;
    if (static_cast<int>(f) == a.corrupt) {
      write_text_file(p, std::string(17, '\x7f'));
    } else {
      write_velodyne_bin(p, seq.scans[f]);
    }
  }
  write_kitti_poses(dir / "gt.txt", seq.gt);

  // Exact relative poses over every key-frame span of the odometry nodes.
  const long o = cfg.gate.odometry_factor, p = cfg.gate.keyframe_factor;
  const long last_node = o * ((static_cast<long>(seq.scans.size()) - 1) / o);
  std::vector<Pose> key;
  for (long k = 0; k < last_node / p; ++k) {
    key.push_back(seq.gt.poses[static_cast<std::size_t>(k * p)].inverse() *
                  seq.gt.poses[static_cast<std::size_t>((k + 1) * p)]);
  }
  write_kitti_poses(dir / "keyframes.txt", Trajectory::from_poses(key));

  Manifest m;
  m.command = "synth";
  m.config = cfg;
  m.set("out_dir", absolute(a.out_dir));
  const std::string manifest_path =
      a.manifest.empty() ? (dir / "synth.manifest").string() : a.manifest;
  m.set("manifest", absolute(manifest_path));
  m.set("frames", std::to_string(a.frames));
  m.set("landmarks", std::to_string(a.landmarks));
  m.set("extent", format_double(a.extent));
  m.set("noise", format_double(a.noise));
  m.set("dropout", format_double(a.dropout));
  m.set("speed", format_double(a.speed));
  m.set("yaw", format_double(a.yaw));
  std::string segs;
  for (const auto& s : a.segments) segs += (segs.empty() ? "" : " ") + s;
  m.set("segments", segs);
  m.set("degrade", a.degrade);
  m.set("corrupt", std::to_string(a.corrupt));
  m.write(manifest_path);
  out << "scans = " << seq.scans.size() << "\npath_length = "
      << format_double(seq.gt.cumulative_lengths.back()) << '\n';
  return kExitOk;
}

int cmd_replay(const std::string& manifest_path, std::ostream& out) {
  const Manifest m = Manifest::read(manifest_path);
  auto get = [&](const char* k) { return m.get(k); };
  if (m.command == "odometry") {
    OdometryArgs a{get("scan_dir"), get("output"), get("manifest"), get("head"),
                   get("confidence_output"), get("strict") == "true"};
    return cmd_odometry(a, m.config, out);
  }
  if (m.command == "fit-evidence") {
    FitEvidenceArgs a{get("odometry_manifest"), get("gt"), get("output"), get("manifest"),
                      parse_double(get("train_fraction"), 0),
                      static_cast<int>(parse_long(get("epochs"), 0))};
    return cmd_fit_evidence(a, m.config, out);
  }
  if (m.command == "refine") {
    RefineArgs a{get("trajectory"), get("confidences"), get("output"),
                 get("keyframes"), get("graph_output"), get("manifest")};
    return cmd_refine(a, m.config, out);
  }
  if (m.command == "evaluate") {
    EvaluateArgs a{get("gt"), get("estimate"), get("csv"), get("svg"), get("manifest"),
                   static_cast<int>(parse_long(get("gt_step"), 0))};
    return cmd_evaluate(a, m.config, out);
  }
  if (m.command == "synth") {
    SynthArgs a;
    a.out_dir = get("out_dir");
    a.manifest = get("manifest");
    a.frames = static_cast<int>(parse_long(get("frames"), 0));
    a.landmarks = static_cast<int>(parse_long(get("landmarks"), 0));
    a.extent = parse_double(get("extent"), 0);
    a.noise = parse_double(get("noise"), 0);
    a.dropout = parse_double(get("dropout"), 0);
    a.speed = parse_double(get("speed"), 0);
    a.yaw = parse_double(get("yaw"), 0);
    for (auto s : split_whitespace(get("segments"))) a.segments.emplace_back(s);
    a.degrade = get("degrade");
    a.corrupt = static_cast<int>(parse_long(get("corrupt"), 0));
    return cmd_synth(a, m.config, out);
  }
  throw Error(ErrorCode::kParseError,
              manifest_path + ": cannot replay command '" + m.command + "'");
}

}  // namespace evlo::cli
