#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"
#include "evlo/error.hpp"

using namespace evlo;
using namespace evlo::cli;

int main(int argc, char** argv) {
  CLI::App app{"Evidential LiDAR odometry toolkit"};
  app.require_subcommand(1);

  std::string config_path, svg_path;
  std::uint64_t seed = 0;
  bool strict = false;
  auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--config", config_path, "Run configuration (key = value)");
  app.add_flag("--strict", strict, "Exit nonzero when any frame is flagged");
  app.add_option("--svg", svg_path, "Trajectory plot output (evaluate)");

  RegisterArgs reg;
  auto* c_reg = app.add_subcommand("register", "Register one scan pair");
  c_reg->add_option("source", reg.source, "Source scan (.bin)")->required();
  c_reg->add_option("target", reg.target, "Target scan (.bin)")->required();
  c_reg->add_option("--gt", reg.gt, "KITTI file whose first pose is the ground truth");

  OdometryArgs odo;
  auto* c_odo = app.add_subcommand("odometry", "Chain registrations over a scan directory");
  c_odo->add_option("scan_dir", odo.scan_dir)->required();
  c_odo->add_option("output", odo.output, "KITTI trajectory output")->required();
  c_odo->add_option("--manifest", odo.manifest);
  c_odo->add_option("--head", odo.head, "Evidential model for per-frame confidences");
  c_odo->add_option("--confidence-out", odo.confidence_output,
                    "Per key-frame span confidences (needs --head)");

  FitEvidenceArgs fit;
  auto* c_fit = app.add_subcommand("fit-evidence", "Train evidential heads from an odometry run");
  c_fit->add_option("manifest", fit.odometry_manifest, "Odometry run manifest")->required();
  c_fit->add_option("gt", fit.gt, "KITTI ground truth over every scan")->required();
  c_fit->add_option("output", fit.output, "Model output")->required();
  c_fit->add_option("--train-fraction", fit.train_fraction);
  c_fit->add_option("--epochs", fit.epochs);
  c_fit->add_option("--run-manifest", fit.manifest);

  RefineArgs ref;
  auto* c_ref = app.add_subcommand("refine", "Confidence-gated pose-graph refinement");
  c_ref->add_option("trajectory", ref.trajectory)->required();
  c_ref->add_option("confidences", ref.confidences)->required();
  c_ref->add_option("output", ref.output)->required();
  c_ref->add_option("--keyframes", ref.keyframes, "Direct key-frame measurements (KITTI)");
  c_ref->add_option("--graph-out", ref.graph_output);
  c_ref->add_option("--manifest", ref.manifest);

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "KITTI drift metrics");
  c_ev->add_option("gt", ev.gt)->required();
  c_ev->add_option("estimate", ev.estimate)->required();
  c_ev->add_option("--csv", ev.csv);
  c_ev->add_option("--gt-step", ev.gt_step, "Use every k-th ground-truth pose");
  c_ev->add_option("--manifest", ev.manifest);

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("synth", "Write a synthetic sequence");
  c_syn->add_option("out_dir", syn.out_dir)->required();
  c_syn->add_option("--frames", syn.frames);
  c_syn->add_option("--landmarks", syn.landmarks);
  c_syn->add_option("--extent", syn.extent);
  c_syn->add_option("--noise", syn.noise);
  c_syn->add_option("--dropout", syn.dropout);
  c_syn->add_option("--speed", syn.speed);
  c_syn->add_option("--yaw", syn.yaw);
  c_syn->add_option("--segment", syn.segments, "first:last:speed:yaw (repeatable)");
  c_syn->add_option("--degrade", syn.degrade, "first:last:sigma extra noise");
  c_syn->add_option("--corrupt", syn.corrupt, "Frame written as a truncated record");
  c_syn->add_option("--manifest", syn.manifest);

  std::string replay_path;
  auto* c_rep = app.add_subcommand("replay", "Re-run a recorded manifest");
  c_rep->add_option("manifest", replay_path)->required();

  for (auto* c : {c_reg, c_odo, c_fit, c_ref, c_ev, c_syn, c_rep}) c->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_rep->parsed()) return cmd_replay(replay_path, std::cout);
    RunConfig cfg = config_path.empty() ? RunConfig{} : read_run_config(config_path);
    if (seed_opt->count() > 0) cfg.seed = seed;
    cfg.validate();
    if (c_reg->parsed()) return cmd_register(reg, cfg, std::cout);
    if (c_odo->parsed()) {
      odo.strict = strict;
      return cmd_odometry(odo, cfg, std::cout);
    }
    if (c_fit->parsed()) return cmd_fit_evidence(fit, cfg, std::cout);
    if (c_ref->parsed()) return cmd_refine(ref, cfg, std::cout);
    if (c_ev->parsed()) {
      ev.svg = svg_path;
      return cmd_evaluate(ev, cfg, std::cout);
    }
    if (c_syn->parsed()) return cmd_synth(syn, cfg, std::cout);
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "IoError: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
