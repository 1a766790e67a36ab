// Command-line front end: replay, synth, eval.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "legged_odom/errors.hpp"
#include "legged_odom/replay.hpp"
#include "legged_odom/synthetic.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw legged::ParseError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proprioceptive legged odometry: replay, synthetic logs, evaluation"};
  app.require_subcommand(1);

  std::string log_path, config_path, variant, out_dir, gt_path, est_path, report_path;
  double rpe_delta = 1.0;
  double rate = 100.0;
  bool noise = false;
  std::uint64_t seed = 0;
  bool seed_given = false;

  auto* replay_cmd = app.add_subcommand("replay", "Run an estimator over a log");
  replay_cmd->add_option("--log", log_path, "JSONL log")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--config", config_path, "Estimator JSON config")
      ->required()
      ->check(CLI::ExistingFile);
  replay_cmd->add_option("--variant", variant, "ekf | iekf | fl-single | fl-combined | dr")
      ->required();
  replay_cmd->add_option("--out", out_dir, "Output directory")->required();
  replay_cmd->add_option("--rpe-delta", rpe_delta, "RPE pair separation (s)");
  replay_cmd->add_option("--gt", gt_path, "Ground truth TUM file (default: gt records in the log)");
  replay_cmd->add_option("--rate", rate, "Dead-reckoned output rate (Hz), 0 for updates only");

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic trot log");
  synth_cmd->add_option("--config", config_path, "Gait JSON config (default gait if omitted)")
      ->check(CLI::ExistingFile);
  synth_cmd->add_option("--out", out_dir, "Output directory")->required();
  synth_cmd->add_flag("--noise", noise, "Add IMU/contact noise and constant bias");
  synth_cmd->add_option("--seed", seed, "Noise seed")->each([&](const std::string&) {
    seed_given = true;
  });

  auto* eval_cmd = app.add_subcommand("eval", "Compute APE/RPE between two TUM trajectories");
  eval_cmd->add_option("--est", est_path, "Estimated trajectory")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--gt", gt_path, "Ground truth trajectory")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--rpe-delta", rpe_delta, "RPE pair separation (s)");
  eval_cmd->add_option("--report", report_path, "Write the JSON report here as well");

  CLI11_PARSE(app, argc, argv);

  try {
    if (replay_cmd->parsed()) {
      legged::EstimatorConfig config = legged::load_config(config_path);
      config.variant = legged::parse_variant(variant);
      const auto records = legged::parse_log(std::filesystem::path(log_path));
      const auto result = legged::replay(records, config, {rate});
      const std::filesystem::path out(out_dir);
      std::filesystem::create_directories(out);
      legged::write_trajectory(out / (variant + ".tum"), result.trajectory);
      const auto gt = gt_path.empty() ? legged::ground_truth_of(records)
                                      : legged::read_trajectory(std::filesystem::path(gt_path));
      legged::emit_plot_data({{variant, result.trajectory}}, gt, out / "plots");
      std::cerr << "scheduled updates: " << result.scheduled_updates << "\n";
      if (!gt.empty()) {
        auto report = legged::evaluate(result.trajectory, gt, rpe_delta);
        report.name = variant;
        const std::string text = legged::format_report(report);
        write_text(out / (variant + "_metrics.json"), text);
        std::cout << text;
      }
    } else if (synth_cmd->parsed()) {
      legged::GaitConfig gait =
          config_path.empty() ? legged::GaitConfig{} : legged::parse_gait_config(read_file(config_path));
      if (noise) gait.noise = true;
      if (seed_given) gait.seed = seed;
      const auto log = legged::generate_synthetic(gait);
      legged::write_synthetic(log, out_dir);
      std::cerr << "wrote " << log.records.size() << " records to " << out_dir << "\n";
    } else if (eval_cmd->parsed()) {
      const auto est = legged::read_trajectory(std::filesystem::path(est_path));
      const auto gt = legged::read_trajectory(std::filesystem::path(gt_path));
      auto report = legged::evaluate(est, gt, rpe_delta);
      report.name = std::filesystem::path(est_path).stem().string();
      const std::string text = legged::format_report(report);
      if (!report_path.empty()) write_text(report_path, text);
      std::cout << text;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
