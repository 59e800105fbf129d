#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <regex>
#include <sstream>
#include <string>

#include "evlo/alignment.hpp"
#include "evlo/io_formats.hpp"
#include "evlo/metrics.hpp"
#include "evlo/synth.hpp"
#include "evlo/text_io.hpp"

namespace evlo {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = -1;
  std::string out, err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("evlo_cli_") +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  CliRun run(const std::string& args) const {
    const std::string out = path("stdout.txt"), err = path("stderr.txt");
    const std::string cmd =
        std::string(EVLO_CLI_PATH) + " " + args + " >" + out + " 2>" + err;
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_text_file(out);
    r.err = read_text_file(err);
    return r;
  }

  // Synthetic sequence written through the CLI.
  void synth(const std::string& name, const std::string& extra) const {
    const CliRun r = run("synth " + path(name) + " " + extra);
    ASSERT_EQ(r.code, 0) << r.err;
  }

  fs::path dir_;
};

std::string value_of(const std::string& text, const std::string& key) {
  const std::regex re("(^|\n)" + key + " = ([^\n]*)");
  std::smatch m;
  return std::regex_search(text, m, re) ? m[2].str() : std::string();
}

TEST_F(CliTest, IdenticalFilesGiveIdentity) {
  PairSpec spec;
  spec.seed = 3;
  write_velodyne_bin(path("a.bin"), generate_pair(spec).source);
  const CliRun r = run("register " + path("a.bin") + " " + path("a.bin"));
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "pose");
  Eigen::Matrix<double, 3, 4> m;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) in >> m(i, j);
  }
  Eigen::Matrix<double, 3, 4> id = Eigen::Matrix<double, 3, 4>::Zero();
  id.leftCols<3>().setIdentity();
  EXPECT_LT((m - id).cwiseAbs().maxCoeff(), 1e-9);
}

TEST_F(CliTest, RegisterMatchesLibraryHarness) {
  PairSpec spec;
  spec.seed = 11;
  const SyntheticPair pair = generate_pair(spec);
  write_velodyne_bin(path("src.bin"), pair.source);
  write_velodyne_bin(path("tgt.bin"), pair.target);
  write_kitti_poses(fs::path(path("gt.txt")), Trajectory::from_poses({pair.gt}));
  const CliRun r = run("register " + path("src.bin") + " " + path("tgt.bin") + " --gt " + path("gt.txt"));
  ASSERT_EQ(r.code, 0) << r.err;

  const PointCloud src = read_velodyne_bin(path("src.bin"));
  const PointCloud tgt = read_velodyne_bin(path("tgt.bin"));
  const Pose gt = read_kitti_poses(fs::path(path("gt.txt"))).poses[0];
  const RegistrationResult res = register_pair(src, tgt);
  EXPECT_EQ(value_of(r.out, "phi_deg"),
            format_double(angular_deviation(gt.rotation, res.pose.rotation)));
  EXPECT_EQ(value_of(r.out, "dt_m"),
            format_double(translation_error(gt.translation, res.pose.translation)));
}

TEST_F(CliTest, MissingFileNamesPath) {
  const CliRun r = run("register " + path("nope.bin") + " " + path("nope.bin"));
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find(path("nope.bin")), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("IoError"), std::string::npos) << r.err;
}

TEST_F(CliTest, StraightLineOdometry) {
  synth("seq", "--frames 50 --speed 1 --yaw 0");
  const CliRun r = run("odometry " + path("seq/scans") + " " + path("odo.txt"));
  ASSERT_EQ(r.code, 0) << r.err;
  const Trajectory gt = read_kitti_poses(fs::path(path("seq/gt.txt")));
  const Trajectory est = read_kitti_poses(fs::path(path("odo.txt")));
  ASSERT_EQ(est.size(), 25u);
  EXPECT_LT((est.poses.back().translation - gt.poses[48].translation).norm(), 0.5);
  EXPECT_EQ(value_of(r.out, "flagged"), "0");
}

TEST_F(CliTest, CorruptedScanIsFlagged) {
  synth("seq", "--frames 12 --yaw 6 --corrupt 6");
  EXPECT_EQ(fs::file_size(path("seq/scans/000006.bin")), 17u);
  const CliRun r = run("odometry " + path("seq/scans") + " " + path("odo.txt"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("frame 6 flagged: TruncatedRecord"), std::string::npos) << r.out;
  EXPECT_EQ(value_of(r.out, "flagged"), "2");
  EXPECT_EQ(read_kitti_poses(fs::path(path("odo.txt"))).size(), 6u);
  const std::string manifest = read_text_file(path("odo.txt.manifest"));
  EXPECT_NE(manifest.find(",TruncatedRecord,"), std::string::npos);

  const CliRun strict = run("--strict odometry " + path("seq/scans") + " " + path("odo2.txt"));
  EXPECT_EQ(strict.code, 2);
}

TEST_F(CliTest, MisalignedConfidences) {
  synth("seq", "--frames 13 --yaw 6");
  ASSERT_EQ(run("odometry " + path("seq/scans") + " " + path("odo.txt")).code, 0);
  write_text_file(path("conf.txt"), "0.5 0.5 0.5 0.5 0.5 0.5\n");
  const CliRun r = run("refine " + path("odo.txt") + " " + path("conf.txt") + " " + path("ref.txt"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("MisalignedInputs"), std::string::npos) << r.err;
}

TEST_F(CliTest, InBandConfidencesLeaveTrajectoryUnchanged) {
  synth("seq", "--frames 13 --yaw 6 --noise 0.01");
  ASSERT_EQ(run("odometry " + path("seq/scans") + " " + path("odo.txt")).code, 0);
  write_text_file(path("conf.txt"), "0.5 0.5 0.5 0.5 0.5 0.5\n0.3 0.6 0.5 0.5 0.5 0.7\n0.2 0.2 0.2 0.2 0.2 0.2\n");
  const CliRun r = run("refine " + path("odo.txt") + " " + path("conf.txt") + " " + path("ref.txt"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(value_of(r.out, "keyframe gated_in"), "0");
  EXPECT_EQ(value_of(r.out, "keyframe gated_out"), "3");
  EXPECT_EQ(read_text_file(path("ref.txt")), read_text_file(path("odo.txt")));
}

TEST_F(CliTest, EvaluateIdenticalIsZeroAndSvgHasTwoPolylines) {
  synth("seq", "--frames 60 --yaw 6");
  const CliRun r = run("--svg " + path("plot.svg") + " evaluate " + path("seq/gt.txt") + " " +
                    path("seq/gt.txt") + " --csv " + path("drift.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::stod(value_of(r.out, "rte_percent")), 0.0);
  EXPECT_LT(std::stod(value_of(r.out, "rre_deg_per_100m")), 1e-9);
  EXPECT_EQ(read_text_file(path("drift.csv")).rfind("length,rre_deg_per_100m,rte_percent,segments\n", 0), 0u);

  const std::string svg = read_text_file(path("plot.svg"));
  std::size_t polylines = 0;
  for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++polylines;
  EXPECT_EQ(polylines, 2u);
  // Every element is closed in order.
  std::vector<std::string> stack;
  const std::regex tag(R"(<(/?)([A-Za-z]+)[^>]*?(/?)>)");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), tag); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    if (m[3] == "/") continue;
    if (m[1] == "/") {
      ASSERT_FALSE(stack.empty());
      EXPECT_EQ(stack.back(), m[2].str());
      stack.pop_back();
    } else {
      stack.push_back(m[2].str());
    }
  }
  EXPECT_TRUE(stack.empty());
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
}

TEST_F(CliTest, EvaluateScaleDrift) {
  std::vector<Pose> gt, est;
  for (int i = 0; i < 900; ++i) {
    gt.push_back(Pose::from_translation(Vec3(i, 0, 0)));
    est.push_back(Pose::from_translation(Vec3(1.01 * i, 0, 0)));
  }
  write_kitti_poses(fs::path(path("gt.txt")), Trajectory::from_poses(gt));
  write_kitti_poses(fs::path(path("est.txt")), Trajectory::from_poses(est));
  const CliRun r = run("evaluate " + path("gt.txt") + " " + path("est.txt"));
  ASSERT_EQ(r.code, 0) << r.err;
  // Without --csv the report goes to stdout; the last row is "all".
  const auto all = r.out.rfind("\nall,");
  ASSERT_NE(all, std::string::npos) << r.out;
  std::istringstream row(r.out.substr(all + 5));
  std::string rre, rte;
  std::getline(row, rre, ',');
  std::getline(row, rte, ',');
  EXPECT_EQ(std::stod(rre), 0.0);
  EXPECT_NEAR(std::stod(rte), 1.0, 0.01);
}

TEST_F(CliTest, ReplayIsBitIdentical) {
  synth("seq", "--frames 13 --yaw 6 --noise 0.01");
  ASSERT_EQ(run("--seed 5 odometry " + path("seq/scans") + " " + path("odo.txt")).code, 0);
  const std::string first = read_text_file(path("odo.txt"));
  const std::string manifest = read_text_file(path("odo.txt.manifest"));
  fs::remove(path("odo.txt"));
  const CliRun r = run("replay " + path("odo.txt.manifest"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_text_file(path("odo.txt")), first);
  EXPECT_EQ(read_text_file(path("odo.txt.manifest")), manifest);
  EXPECT_EQ(value_of(manifest, "seed"), "5");
}

TEST_F(CliTest, UnknownConfigKeyFails) {
  write_text_file(path("cfg.txt"), "pot.mas = 0.2\n");
  synth("seq", "--frames 3");
  const CliRun r = run("--config " + path("cfg.txt") + " odometry " + path("seq/scans") + " " + path("o.txt"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("ParseError"), std::string::npos) << r.err;
}

}  // namespace
}  // namespace evlo
