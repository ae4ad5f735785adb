// Command-line entry point: train, report, serve.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "trl/config.hpp"
#include "trl/errors.hpp"
#include "trl/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInvalidConfig = 2;

int train(const std::string& config_path, const std::optional<std::string>& seeds,
          const std::optional<std::string>& out_dir) {
  trl::ExperimentConfig cfg = trl::load_experiment_config(config_path);
  if (seeds) cfg.seeds = trl::parse_seed_list(*seeds);
  if (out_dir) cfg.output_dir = *out_dir;
  if (cfg.feedback_source == trl::FeedbackSourceKind::kLive) {
    throw trl::Error(trl::ErrorCode::kInvalidConfig,
                     "session.feedback_source: \"live\" needs a human at the console; use `trl serve`");
  }

  std::cerr << "training " << trl::to_string(cfg.algorithm) << " on " << trl::to_string(cfg.env) << " for "
            << cfg.seeds.size() << " seed(s) x " << cfg.episodes << " episodes\n";
  const auto table = trl::run_experiment(cfg);
  trl::write_experiment_outputs(cfg, table, cfg.output_dir);

  const auto summary = trl::summarize(std::string(trl::to_string(cfg.algorithm)), cfg.env, table,
                                      cfg.convergence_threshold, cfg.convergence_window, cfg.episodes);
  for (std::size_t i = 0; i < summary.per_seed.size(); ++i) {
    std::cerr << "  seed " << cfg.seeds[i] << ": ";
    if (summary.per_seed[i]) std::cerr << "converged at episode " << *summary.per_seed[i];
    else std::cerr << "did not converge";
    std::cerr << ", final moving average " << summary.final_moving_average[i] << '\n';
  }
  std::cerr << "wrote " << cfg.output_dir << '/' << trl::to_string(cfg.algorithm) << ".{csv,json}\n";
  return kExitOk;
}

}  // namespace

int serve_main(const std::string& config_path, const std::string& host, unsigned short port);

int main(int argc, char** argv) {
  CLI::App app{"Human-in-the-loop SARSA(lambda)/A3C trainer"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> seeds;
  std::optional<std::string> out_dir;
  auto* train_cmd = app.add_subcommand("train", "Run an experiment from a config file");
  train_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required();
  train_cmd->add_option("--seeds", seeds, "Seed range '0..9' or list '0,3,7'");
  train_cmd->add_option("--out", out_dir, "Output directory");

  std::string in_dir;
  auto* report_cmd = app.add_subcommand("report", "Summarize runs written by train");
  report_cmd->add_option("--in", in_dir, "Directory holding run outputs")->required();

  std::string serve_config;
  std::string host = "127.0.0.1";
  unsigned short port = 8765;
  auto* serve_cmd = app.add_subcommand("serve", "Run a live session for the teacher console");
  serve_cmd->add_option("--config", serve_config, "Experiment config (JSON)")->required();
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--port", port, "Bind port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train_cmd) return train(config_path, seeds, out_dir);
    if (*report_cmd) {
      trl::print_report(in_dir, std::cout);
      return kExitOk;
    }
    if (*serve_cmd) return serve_main(serve_config, host, port);
  } catch (const trl::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == trl::ErrorCode::kInvalidConfig ? kExitInvalidConfig : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}
