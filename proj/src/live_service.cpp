#include "trl/live_service.hpp"

#include <chrono>
#include <deque>
#include <random>
#include <sstream>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "trl/errors.hpp"

namespace trl {

namespace {

using nlohmann::json;

// Counts the non-neutral events handed to the learner. Every drained event is
// applied on the same step because the current tuple is buffered first.
class CountingSource final : public FeedbackSource {
 public:
  CountingSource(FeedbackSource& inner, std::atomic<int>& counter) : inner_(&inner), counter_(&counter) {}

  void observe(std::int64_t step, double time, const Observation& obs, double action) override {
    inner_->observe(step, time, obs, action);
  }
  void drain(double now, std::vector<FeedbackEvent>& out) override {
    const auto before = out.size();
    inner_->drain(now, out);
    for (auto i = before; i < out.size(); ++i) {
      if (out[i].value != 0) counter_->fetch_add(1);
    }
  }

 private:
  FeedbackSource* inner_;
  std::atomic<int>* counter_;
};

std::string make_session_id(std::uint64_t seed) {
  std::ostringstream s;
  s << std::hex << mix_seed(seed, static_cast<std::uint64_t>(wall_clock_ms()));
  return s.str();
}

bool is_integer(const json& j) { return j.is_number_integer() || j.is_number_unsigned(); }

}  // namespace

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::kIdle: return "idle";
    case Phase::kRunning: return "running";
    case Phase::kPaused: return "paused";
    case Phase::kFinished: return "finished";
  }
  return "unknown";
}

std::int64_t wall_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

SessionController::SessionController(ExperimentConfig cfg, std::uint64_t seed, MessageSink sink)
    : cfg_(std::move(cfg)), base_seed_(seed), session_id_(make_session_id(seed)), sink_(std::move(sink)) {
  cfg_.validate();
  if (!is_hybrid(cfg_.algorithm)) {
    throw Error(ErrorCode::kInvalidConfig, "a live session needs a hybrid algorithm to route teacher feedback");
  }
  counted_ = std::make_unique<CountingSource>(queue_, feedback_applied_);
}

SessionController::~SessionController() { halt_training(); }

Phase SessionController::phase() const {
  std::lock_guard lock(mutex_);
  return phase_;
}

std::uint64_t SessionController::seed() const {
  std::lock_guard lock(mutex_);
  return resets_ == 0 ? base_seed_ : mix_seed(base_seed_, static_cast<std::uint64_t>(resets_));
}

void SessionController::client_connected(ClientId) { clients_.fetch_add(1); }
void SessionController::client_disconnected(ClientId) { clients_.fetch_sub(1); }

void SessionController::emit(std::optional<ClientId> client, json msg, bool droppable) {
  std::lock_guard lock(out_mutex_);
  msg["seq"] = ++out_seq_;
  msg["ts_ms"] = wall_clock_ms();
  sink_(client, msg.dump(), droppable);
}

void SessionController::send_error(ClientId client, std::string_view code, std::string detail) {
  emit(client, json{{"type", "error"}, {"code", code}, {"detail", std::move(detail)}});
}

json SessionController::metrics_locked() const {
  const int window = cfg_.convergence_window;
  double ma = 0.0;
  if (!episode_rewards_.empty()) {
    const auto n = std::min<std::size_t>(episode_rewards_.size(), static_cast<std::size_t>(window));
    for (auto i = episode_rewards_.size() - n; i < episode_rewards_.size(); ++i) ma += episode_rewards_[i];
    ma /= static_cast<double>(n);
  }
  return json{{"type", "metrics"},
              {"episode", current_episode_},
              {"ma_reward", ma},
              {"feedback_count", feedback_applied_.load()},
              {"phase", to_string(phase_)}};
}

json SessionController::metrics_snapshot() const {
  std::lock_guard lock(mutex_);
  return metrics_locked();
}

void SessionController::handle_text(ClientId client, std::string_view text) {
  json msg;
  try {
    msg = json::parse(text);
  } catch (const json::parse_error& e) {
    send_error(client, "malformed", std::string("not JSON: ") + e.what());
    return;
  }
  handle_message(client, msg);
}

void SessionController::handle_message(ClientId client, const json& msg) {
  if (!msg.is_object()) return send_error(client, "malformed", "expected a JSON object");
  const auto type = msg.find("type");
  if (type == msg.end() || !type->is_string()) return send_error(client, "malformed", "missing string field 'type'");
  for (const char* field : {"seq", "ts_ms"}) {
    const auto it = msg.find(field);
    if (it == msg.end() || !is_integer(*it)) {
      return send_error(client, "malformed", std::string("missing integer field '") + field + "'");
    }
  }
  const auto kind = type->get<std::string>();
  if (kind == "feedback") {
    const auto v = msg.find("value");
    if (v == msg.end() || !is_integer(*v) || (v->get<long long>() != 1 && v->get<long long>() != -1)) {
      return send_error(client, "malformed", "feedback 'value' must be -1 or 1");
    }
    return handle_feedback(client, v->get<int>());
  }
  if (kind == "control") {
    const auto a = msg.find("action");
    if (a == msg.end() || !a->is_string()) return send_error(client, "malformed", "control needs a string 'action'");
    return handle_control(client, a->get<std::string>());
  }
  send_error(client, "malformed", "unsupported message type '" + kind + "'");
}

void SessionController::handle_feedback(ClientId client, int value) {
  json ack;
  {
    std::lock_guard lock(mutex_);
    if (phase_ != Phase::kRunning) {
      const std::string detail = std::string("feedback is accepted only while running (phase ") +
                                 std::string(to_string(phase_)) + ")";
      // Reply outside the lock below.
      ack = json{{"type", "error"}, {"code", "not-running"}, {"detail", detail}};
    } else {
      queue_.push(value, FeedbackOrigin::kHuman);
      ack = metrics_locked();
    }
  }
  emit(client, std::move(ack));
}

void SessionController::handle_control(ClientId client, const std::string& action) {
  std::string illegal;
  bool start = false, halt = false;
  {
    std::lock_guard lock(mutex_);
    const Phase p = phase_;
    if (action == "start") {
      if (p == Phase::kIdle) start = true;
      else illegal = "start is only legal when idle";
    } else if (action == "pause") {
      if (p == Phase::kRunning) phase_ = Phase::kPaused;
      else illegal = "pause is only legal while running";
    } else if (action == "resume") {
      if (p == Phase::kPaused) {
        phase_ = Phase::kRunning;
        paced_steps_ = 0;
        pace_origin_ = std::chrono::steady_clock::now();
      } else {
        illegal = "resume is only legal while paused";
      }
    } else if (action == "stop") {
      halt = true;
    } else if (action == "reset") {
      halt = true;
    } else {
      return send_error(client, "malformed", "unknown control action '" + action + "'");
    }
  }
  cv_.notify_all();
  if (!illegal.empty()) return send_error(client, "illegal-transition", illegal);

  if (halt) {
    halt_training();
    std::lock_guard lock(mutex_);
    if (action == "reset") {
      ++resets_;
      phase_ = Phase::kIdle;
      current_episode_ = 0;
      episode_rewards_.clear();
      feedback_applied_.store(0);
      queue_.clear();
    } else {
      phase_ = Phase::kFinished;
    }
  }
  if (start) start_training();
  emit(client, metrics_snapshot());
}

void SessionController::start_training() {
  halt_training();
  {
    std::lock_guard lock(mutex_);
    phase_ = Phase::kRunning;
    worker_done_ = false;
    pace_origin_ = std::chrono::steady_clock::now();
    paced_steps_ = 0;
  }
  stop_.store(false);
  const std::uint64_t run_seed = seed();
  worker_ = std::jthread([this, run_seed] {
    std::string failure;
    try {
      SessionIo io;
      io.source = counted_.get();
      io.observer = this;
      run_session(cfg_, run_seed, io);
    } catch (const std::exception& e) {
      failure = e.what();
    }
    bool natural_end = false;
    {
      std::lock_guard lock(mutex_);
      if (!stop_.load()) {
        phase_ = Phase::kFinished;
        natural_end = true;
      }
    }
    if (!failure.empty()) emit(std::nullopt, json{{"type", "error"}, {"code", "training-failed"}, {"detail", failure}});
    if (natural_end) emit(std::nullopt, metrics_snapshot());
    {
      std::lock_guard lock(mutex_);
      worker_done_ = true;
    }
    cv_.notify_all();
  });
}

void SessionController::halt_training() {
  {
    std::lock_guard lock(mutex_);
    stop_.store(true);
  }
  cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void SessionController::wait_until_finished() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return (phase_ == Phase::kFinished || phase_ == Phase::kIdle) && worker_done_; });
}

void SessionController::on_step(const StepContext& ctx) {
  const bool episode_end = ctx.terminal || ctx.truncated;
  std::optional<json> episode_metrics;
  {
    std::unique_lock lock(mutex_);
    current_episode_ = ctx.episode;
    if (episode_end) {
      episode_rewards_.push_back(ctx.cum_reward);
      episode_metrics = metrics_locked();
    }
  }

  if (ctx.global_step % cfg_.live.state_decimation == 0 || episode_end) {
    json obs = json::array();
    for (const double v : ctx.next_obs.values()) obs.push_back(v);
    emit(std::nullopt,
         json{{"type", "state"},
              {"episode", ctx.episode},
              {"step", ctx.step},
              {"obs", std::move(obs)},
              {"action", ctx.action},
              {"reward", ctx.reward},
              {"cum_reward", ctx.cum_reward}},
         true);
  }
  if (episode_metrics) emit(std::nullopt, std::move(*episode_metrics));

  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return phase_ != Phase::kPaused || stop_.load(); });
  if (cfg_.live.realtime && !stop_.load()) {
    ++paced_steps_;
    const auto due = pace_origin_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                        std::chrono::duration<double>(cfg_.feedback.step_period * paced_steps_));
    cv_.wait_until(lock, due, [&] { return stop_.load() || phase_ == Phase::kPaused; });
    // A pause that arrives mid-wait blocks here until resume or stop.
    cv_.wait(lock, [&] { return phase_ != Phase::kPaused || stop_.load(); });
  }
}

// ---------------------------------------------------------------------------
// Websocket transport

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace ws = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

constexpr std::size_t kMaxQueuedStateFrames = 32;

}  // namespace

struct LiveServer::Impl {
  struct Client : std::enable_shared_from_this<Client> {
    Client(Impl& owner, tcp::socket socket, ClientId id) : impl(owner), stream(std::move(socket)), id(id) {}

    void start() {
      stream.set_option(ws::stream_base::timeout::suggested(beast::role_type::server));
      stream.async_accept([self = shared_from_this()](beast::error_code ec) {
        if (ec) return;
        self->impl.attach(self);
        self->read();
      });
    }

    void read() {
      stream.async_read(buffer, [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) return self->impl.detach(self->id);
        const std::string text = beast::buffers_to_string(self->buffer.data());
        self->buffer.consume(self->buffer.size());
        self->impl.controller->handle_text(self->id, text);
        self->read();
      });
    }

    // Runs on the io thread.
    void enqueue(std::shared_ptr<const std::string> text, bool droppable) {
      if (droppable) {
        std::size_t queued_states = 0;
        for (const auto& o : outbox) queued_states += o.second;
        if (queued_states >= kMaxQueuedStateFrames) return;
      }
      outbox.emplace_back(std::move(text), droppable);
      if (outbox.size() == 1) write();
    }

    void write() {
      stream.text(true);
      stream.async_write(asio::buffer(*outbox.front().first),
                         [self = shared_from_this()](beast::error_code ec, std::size_t) {
                           if (ec) return self->impl.detach(self->id);
                           self->outbox.pop_front();
                           if (!self->outbox.empty()) self->write();
                         });
    }

    Impl& impl;
    ws::stream<beast::tcp_stream> stream;
    ClientId id;
    beast::flat_buffer buffer;
    std::deque<std::pair<std::shared_ptr<const std::string>, bool>> outbox;
  };

  Impl(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& host, unsigned short port)
      : acceptor(ioc) {
    beast::error_code ec;
    const auto address = asio::ip::make_address(host, ec);
    if (ec) throw Error(ErrorCode::kBindFailure, "bad bind address '" + host + "': " + ec.message());
    const tcp::endpoint ep(address, port);
    acceptor.open(ep.protocol(), ec);
    if (!ec) acceptor.set_option(asio::socket_base::reuse_address(true), ec);
    if (!ec) acceptor.bind(ep, ec);
    if (!ec) acceptor.listen(asio::socket_base::max_listen_connections, ec);
    if (ec) {
      throw Error(ErrorCode::kBindFailure,
                  "cannot listen on " + host + ":" + std::to_string(port) + ": " + ec.message());
    }
    controller = std::make_unique<SessionController>(
        cfg, seed, [this](std::optional<ClientId> client, const std::string& text, bool droppable) {
          deliver(client, text, droppable);
        });
  }

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<Client>(*this, std::move(socket), next_id++)->start();
      accept();
    });
  }

  void attach(const std::shared_ptr<Client>& c) {
    clients.emplace(c->id, c);
    controller->client_connected(c->id);
  }

  void detach(ClientId id) {
    if (clients.erase(id)) controller->client_disconnected(id);
  }

  // Any thread. Posting from under the controller's output lock keeps the
  // per-client order equal to seq order.
  void deliver(std::optional<ClientId> client, const std::string& text, bool droppable) {
    auto shared = std::make_shared<const std::string>(text);
    asio::post(ioc, [this, client, shared, droppable] {
      if (client) {
        if (auto it = clients.find(*client); it != clients.end()) it->second->enqueue(shared, droppable);
        return;
      }
      for (auto& [id, c] : clients) c->enqueue(shared, droppable);
    });
  }

  asio::io_context ioc;
  tcp::acceptor acceptor;
  std::unique_ptr<SessionController> controller;
  std::map<ClientId, std::shared_ptr<Client>> clients;
  ClientId next_id = 1;
};

LiveServer::LiveServer(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& host,
                       unsigned short port)
    : impl_(std::make_unique<Impl>(cfg, seed, host, port)) {}

LiveServer::~LiveServer() {
  stop();
  // The training thread may still post; stop it before the io_context dies.
  impl_->controller.reset();
}

unsigned short LiveServer::port() const { return impl_->acceptor.local_endpoint().port(); }

SessionController& LiveServer::controller() { return *impl_->controller; }

void LiveServer::run() {
  impl_->accept();
  impl_->ioc.run();
}

void LiveServer::stop() {
  asio::post(impl_->ioc, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
    for (auto& [id, c] : impl_->clients) c->stream.next_layer().close();
    impl_->clients.clear();
  });
  impl_->ioc.stop();
}

}  // namespace trl
