#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "evlo/alignment.hpp"
#include "evlo/io_formats.hpp"

namespace evlo::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitFlagged = 2;  // --strict with flagged frames

// Line-oriented run record:
//   command = <name>
//   arg.<name> = <value>     (one per argument, in a fixed order)
//   [config]                 (the effective RunConfig, every key)
//   [frames]                 (optional CSV block: header then rows)
struct Manifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> args;
  RunConfig config;
  std::string frames_header;
  std::vector<std::string> frames;

  void set(const std::string& key, const std::string& value);
  // Empty when the argument is absent.
  std::string get(const std::string& key) const;

  void write(const std::filesystem::path& path) const;
  static Manifest read(const std::filesystem::path& path);
};

struct RegisterArgs {
  std::string source, target;
  std::string gt;  // optional KITTI file; its first pose maps source onto target
};

struct OdometryArgs {
  std::string scan_dir;
  std::string output;             // KITTI trajectory, one pose per node
  std::string manifest;           // defaults to <output>.manifest
  std::string head;               // optional evidential model
  std::string confidence_output;  // per key-frame span confidences (needs head)
  bool strict = false;
};

struct FitEvidenceArgs {
  std::string odometry_manifest;
  std::string gt;  // KITTI ground truth over every scan
  std::string output;
  std::string manifest;  // defaults to <output>.manifest
  double train_fraction = 0.5;
  int epochs = 2000;
};

struct RefineArgs {
  std::string trajectory;
  std::string confidences;  // one line of 6 values per key-frame span
  std::string output;
  std::string keyframes;     // optional direct key-frame measurements (KITTI)
  std::string graph_output;  // optional graph dump
  std::string manifest;      // defaults to <output>.manifest
};

struct EvaluateArgs {
  std::string gt, estimate;
  std::string csv;       // stdout when empty
  std::string svg;
  std::string manifest;  // defaults to <csv>.manifest when csv is set
  int gt_step = 1;       // use every k-th ground-truth pose
};

struct SynthArgs {
  std::string out_dir;
  std::string manifest;  // defaults to <out_dir>/synth.manifest
  int frames = 60;
  int landmarks = 600;
  double extent = 40.0;
  double noise = 0.0;
  double dropout = 0.0;
  double speed = 2.0;  // meters per frame
  double yaw = 0.5;    // degrees per frame
  std::vector<std::string> segments;  // first:last:speed:yaw, override speed/yaw
  std::string degrade;                // first:last:sigma
  int corrupt = -1;                   // frame whose scan is written truncated
};

int cmd_register(const RegisterArgs& a, const RunConfig& cfg, std::ostream& out);
int cmd_odometry(const OdometryArgs& a, const RunConfig& cfg, std::ostream& out);
int cmd_fit_evidence(const FitEvidenceArgs& a, const RunConfig& cfg, std::ostream& out);
int cmd_refine(const RefineArgs& a, const RunConfig& cfg, std::ostream& out);
int cmd_evaluate(const EvaluateArgs& a, const RunConfig& cfg, std::ostream& out);
int cmd_synth(const SynthArgs& a, const RunConfig& cfg, std::ostream& out);
// Re-executes a recorded run with its recorded config and paths.
int cmd_replay(const std::string& manifest_path, std::ostream& out);

// [100 * mean residual, matched fraction, rotation angle (deg), |t| (m)]
Eigen::VectorXd registration_features(double mean_residual,
                                      double matched_fraction, const Pose& rel);

}  // namespace evlo::cli
