#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <string>
#include <thread>

#include "trl/config.hpp"
#include "trl/live_service.hpp"

namespace {

volatile std::sig_atomic_t g_interrupted = 0;

void on_signal(int) { g_interrupted = 1; }

}  // namespace

int serve_main(const std::string& config_path, const std::string& host, unsigned short port) {
  trl::ExperimentConfig cfg = trl::load_experiment_config(config_path);
  cfg.feedback_source = trl::FeedbackSourceKind::kLive;
  trl::LiveServer server(cfg, cfg.seeds.front(), host, port);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "session " << server.controller().session_id() << " (" << trl::to_string(cfg.algorithm) << ", seed "
            << server.controller().seed() << ") listening on ws://" << host << ":" << server.port() << std::endl;

  std::atomic<bool> done{false};
  std::jthread watcher([&] {
    while (!done.load() && !g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    if (g_interrupted) server.stop();
  });
  server.run();
  done.store(true);
  return 0;
}
