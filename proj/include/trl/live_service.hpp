#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "trl/harness.hpp"
#include "trl/hybrid.hpp"

namespace trl {

enum class Phase { kIdle, kRunning, kPaused, kFinished };
std::string_view to_string(Phase p);

using ClientId = std::uint64_t;

/// Outbound message sink. A null client means broadcast; `droppable` marks
/// state frames a backpressured client may skip.
using MessageSink = std::function<void(std::optional<ClientId> client, const std::string& text, bool droppable)>;

/// One live training session and its wire protocol, independent of any
/// transport. Inbound text goes to handle_text(); everything outbound
/// (replies, state stream, metrics) goes through the sink with `seq` and
/// `ts_ms` stamped under one lock so every client sees increasing seq.
class SessionController final : public StepObserver {
 public:
  SessionController(ExperimentConfig cfg, std::uint64_t seed, MessageSink sink);
  ~SessionController() override;

  SessionController(const SessionController&) = delete;
  SessionController& operator=(const SessionController&) = delete;

  void handle_text(ClientId client, std::string_view text);
  void handle_message(ClientId client, const nlohmann::json& msg);

  void client_connected(ClientId client);
  void client_disconnected(ClientId client);
  int client_count() const { return clients_.load(); }

  Phase phase() const;
  const std::string& session_id() const { return session_id_; }
  std::uint64_t seed() const;
  /// Non-neutral teacher events applied to the learner since the last reset.
  int feedback_count() const { return feedback_applied_.load(); }
  nlohmann::json metrics_snapshot() const;

  /// Blocks until the training thread leaves the running/paused phases.
  void wait_until_finished();

  // StepObserver, called on the training thread.
  void on_step(const StepContext& ctx) override;
  bool stop_requested() const override { return stop_.load(); }

 private:
  void handle_control(ClientId client, const std::string& action);
  void handle_feedback(ClientId client, int value);
  void start_training();
  void halt_training();
  void emit(std::optional<ClientId> client, nlohmann::json msg, bool droppable = false);
  void send_error(ClientId client, std::string_view code, std::string detail);
  nlohmann::json metrics_locked() const;

  ExperimentConfig cfg_;
  std::uint64_t base_seed_;
  std::string session_id_;
  MessageSink sink_;

  mutable std::mutex mutex_;  // phase, episode stats, pause handshake
  std::condition_variable cv_;
  Phase phase_ = Phase::kIdle;
  bool worker_done_ = true;
  int resets_ = 0;
  int current_episode_ = 0;
  std::vector<double> episode_rewards_;
  std::chrono::steady_clock::time_point pace_origin_;
  std::int64_t paced_steps_ = 0;

  std::mutex out_mutex_;
  std::uint64_t out_seq_ = 0;

  std::atomic<bool> stop_{false};
  std::atomic<int> clients_{0};
  std::atomic<int> feedback_applied_{0};
  QueueFeedbackSource queue_;
  std::unique_ptr<FeedbackSource> counted_;
  std::jthread worker_;
};

/// Websocket front end (Boost.Beast) for a SessionController.
class LiveServer {
 public:
  /// Binds immediately; throws Error(kBindFailure) when the port is taken.
  LiveServer(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& host, unsigned short port);
  ~LiveServer();

  unsigned short port() const;
  SessionController& controller();
  /// Serves until stop() is called.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Milliseconds since the Unix epoch.
std::int64_t wall_clock_ms();

}  // namespace trl
