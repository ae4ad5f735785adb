#include "trl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "trl/checkpoint.hpp"
#include "trl/errors.hpp"
#include "trl/feedback.hpp"
#include "trl/tile_coder.hpp"

namespace trl {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); }

// Forwards steps to an observer for runs without a feedback layer.
class ObserverSarsaHooks final : public SarsaHooks {
 public:
  explicit ObserverSarsaHooks(StepObserver* observer) : observer_(observer) {}
  double on_step(const StepContext& ctx, SarsaAgent&) override {
    observer_->on_step(ctx);
    return 0.0;
  }
  bool stop_requested() const override { return observer_->stop_requested(); }

 private:
  StepObserver* observer_;
};

class ObserverA3cHooks final : public A3cHooks {
 public:
  explicit ObserverA3cHooks(StepObserver* observer) : observer_(observer) {}
  double on_step(const StepContext& ctx, const MlpParams&, GradientSet&) override {
    observer_->on_step(ctx);
    return 0.0;
  }
  bool stop_requested() const override { return observer_->stop_requested(); }

 private:
  StepObserver* observer_;
};

std::string seed_file(const std::filesystem::path& dir, std::uint64_t seed, const char* suffix) {
  return (dir / ("seed-" + std::to_string(seed) + suffix)).string();
}

std::vector<EpisodeMetrics> run_sarsa_session(const ExperimentConfig& cfg, std::uint64_t seed, const SessionIo& io) {
  const EnvSpec spec = default_spec(cfg.env);
  JointTileFeatures features(spec, static_cast<std::size_t>(cfg.tiling.num_tilings),
                             static_cast<std::size_t>(cfg.tiling.tiles_per_dim));
  SarsaConfig scfg = cfg.sarsa;
  scfg.convergence_window = cfg.convergence_window;
  if (cfg.stop_on_convergence) scfg.convergence_threshold = cfg.convergence_threshold;
  SarsaAgent agent(features, scfg);
  auto env = make_env(spec);
  SarsaRunOptions opts{cfg.episodes, seed, TdTarget::kSarsa, cfg.record_wall_clock};

  std::vector<EpisodeMetrics> out;
  if (is_hybrid(cfg.algorithm)) {
    FeedbackLayer layer(features, FeedbackModel(features.size(), cfg.feedback.bias_rate, cfg.feedback.rate_cap),
                        cfg.feedback.credit_delay, cfg.feedback.supervised, cfg.feedback.step_period);
    std::optional<OracleFeedbackSource> oracle;
    FeedbackSource* source = io.source;
    if (!source) {
      oracle.emplace(cfg.teacher, ReferencePolicy{cfg.env, cfg.gains}, seed, cfg.feedback.step_period);
      source = &*oracle;
    }
    HybridSarsaHooks hooks(layer, *source, cfg.feedback, io.observer);
    out = run_sarsa(*env, agent, scfg, opts, &hooks);
  } else if (io.observer) {
    ObserverSarsaHooks hooks(io.observer);
    out = run_sarsa(*env, agent, scfg, opts, &hooks);
  } else {
    out = run_sarsa(*env, agent, scfg, opts);
  }
  if (io.checkpoint_dir) save_weights(seed_file(*io.checkpoint_dir, seed, ".weights.bin"), agent.weights());
  return out;
}

std::vector<EpisodeMetrics> run_a3c_session(const ExperimentConfig& cfg, std::uint64_t seed, const SessionIo& io) {
  const EnvSpec spec = default_spec(cfg.env);
  A3cConfig acfg = cfg.a3c;
  acfg.convergence_window = cfg.convergence_window;
  if (cfg.stop_on_convergence) acfg.convergence_threshold = cfg.convergence_threshold;
  A3cGlobals globals(spec, acfg, seed);
  A3cRunOptions opts{cfg.episodes, seed, cfg.record_wall_clock};

  std::vector<EpisodeMetrics> out;
  if (is_hybrid(cfg.algorithm)) {
    // The predictor still needs a feature map over (O, A).
    JointTileFeatures features(spec, static_cast<std::size_t>(cfg.tiling.num_tilings),
                               static_cast<std::size_t>(cfg.tiling.tiles_per_dim));
    FeedbackLayer layer(features, FeedbackModel(features.size(), cfg.feedback.bias_rate, cfg.feedback.rate_cap),
                        cfg.feedback.credit_delay, cfg.feedback.supervised, cfg.feedback.step_period);
    std::optional<OracleFeedbackSource> oracle;
    FeedbackSource* source = io.source;
    if (!source) {
      oracle.emplace(cfg.teacher, ReferencePolicy{cfg.env, cfg.gains}, seed, cfg.feedback.step_period);
      source = &*oracle;
    }
    HybridA3cHooks hooks(layer, *source, cfg.feedback, spec, acfg, io.observer);
    out = run_a3c(spec, globals, acfg, opts, &hooks);
  } else if (io.observer) {
    ObserverA3cHooks hooks(io.observer);
    out = run_a3c(spec, globals, acfg, opts, &hooks);
  } else {
    out = run_a3c(spec, globals, acfg, opts);
  }
  if (io.checkpoint_dir) {
    const auto snap = globals.snapshot();
    save_mlp(seed_file(*io.checkpoint_dir, seed, ".actor.bin"), snap.actor);
    save_mlp(seed_file(*io.checkpoint_dir, seed, ".critic.bin"), snap.critic);
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double percentile_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kSarsa: return "sarsa";
    case Algorithm::kA3c: return "a3c";
    case Algorithm::kHybridSarsa: return "hybrid-sarsa-il";
    case Algorithm::kHybridA3c: return "hybrid-a3c-il";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  for (auto a : {Algorithm::kSarsa, Algorithm::kA3c, Algorithm::kHybridSarsa, Algorithm::kHybridA3c}) {
    if (to_string(a) == name) return a;
  }
  invalid("unknown algorithm '" + std::string(name) + "'");
}

bool is_hybrid(Algorithm a) { return a == Algorithm::kHybridSarsa || a == Algorithm::kHybridA3c; }

void ExperimentConfig::validate() const {
  if (seeds.empty()) invalid("seeds: at least one seed is required");
  if (episodes < 1) invalid("episodes must be >= 1");
  if (convergence_window < 1) invalid("convergence.window must be >= 1");
  if (!std::isfinite(convergence_threshold)) invalid("convergence.threshold must be finite");
  const EnvSpec spec = default_spec(env);
  const double cap = static_cast<double>(spec.max_steps_per_episode);
  if (env == EnvId::kCartPole && (convergence_threshold <= 0.0 || convergence_threshold > cap)) {
    invalid("convergence.threshold must lie in (0, " + format_double(cap) + "] for " + std::string(to_string(env)));
  }
  if (env == EnvId::kMountainCar && (convergence_threshold >= 0.0 || convergence_threshold < -cap)) {
    invalid("convergence.threshold must lie in [-" + format_double(cap) + ", 0) for " + std::string(to_string(env)));
  }
  if (tiling.num_tilings < 1) invalid("tiling.num_tilings must be >= 1");
  if (tiling.tiles_per_dim < 1) invalid("tiling.tiles_per_dim must be >= 1");
  if (live.state_decimation < 1) invalid("live.state_decimation must be >= 1");
  sarsa.validate();
  a3c.validate();
  feedback.validate();
  teacher.validate();
}

ExperimentConfig default_experiment(EnvId env, Algorithm algorithm) {
  ExperimentConfig cfg;
  cfg.env = env;
  cfg.algorithm = algorithm;
  cfg.convergence_threshold = env == EnvId::kCartPole ? 400.0 : -150.0;
  cfg.convergence_window = 20;
  return cfg;
}

std::vector<EpisodeMetrics> run_session(const ExperimentConfig& cfg, std::uint64_t seed, const SessionIo& io) {
  cfg.validate();
  if (io.checkpoint_dir) std::filesystem::create_directories(*io.checkpoint_dir);
  switch (cfg.algorithm) {
    case Algorithm::kSarsa:
    case Algorithm::kHybridSarsa: return run_sarsa_session(cfg, seed, io);
    case Algorithm::kA3c:
    case Algorithm::kHybridA3c: return run_a3c_session(cfg, seed, io);
  }
  return {};
}

MetricsTable run_experiment(const ExperimentConfig& cfg, Execution execution) {
  cfg.validate();
  const int n = static_cast<int>(cfg.seeds.size());
  std::vector<std::vector<EpisodeMetrics>> per_seed(cfg.seeds.size());
  SessionIo io;
  if (cfg.save_checkpoints) io.checkpoint_dir = std::filesystem::path(cfg.output_dir) / "checkpoints";

  if (execution == Execution::kSerial) {
    for (int i = 0; i < n; ++i) per_seed[i] = run_session(cfg, cfg.seeds[i], io);
  } else {
    std::vector<std::exception_ptr> errors(cfg.seeds.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) {
      try {
        per_seed[i] = run_session(cfg, cfg.seeds[i], io);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  MetricsTable table;
  for (int i = 0; i < n; ++i) {
    for (const auto& m : per_seed[i]) table.push_back({cfg.seeds[i], m});
  }
  return table;
}

void write_metrics_csv(std::ostream& out, const MetricsTable& table) {
  out << "seed,episode,reward,steps,feedback_count,ms\n";
  for (const auto& row : table) {
    const auto& m = row.metrics;
    out << row.seed << ',' << m.episode << ',' << format_double(m.reward) << ',' << m.steps << ','
        << m.feedback_count << ',' << format_double(m.ms) << '\n';
  }
}

MetricsTable read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "seed,episode,reward,steps,feedback_count,ms") {
    invalid("metrics csv: missing or unexpected header");
  }
  MetricsTable table;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) invalid("metrics csv line " + std::to_string(line_no) + ": expected 6 fields");
    try {
      MetricsRow row;
      row.seed = std::stoull(cells[0]);
      row.metrics.episode = std::stoi(cells[1]);
      row.metrics.reward = std::stod(cells[2]);
      row.metrics.steps = std::stoi(cells[3]);
      row.metrics.feedback_count = std::stoi(cells[4]);
      row.metrics.ms = std::stod(cells[5]);
      table.push_back(row);
    } catch (const std::logic_error&) {
      invalid("metrics csv line " + std::to_string(line_no) + ": malformed number");
    }
  }
  return table;
}

std::vector<std::pair<std::uint64_t, std::vector<EpisodeMetrics>>> split_by_seed(const MetricsTable& table) {
  std::vector<std::pair<std::uint64_t, std::vector<EpisodeMetrics>>> out;
  std::map<std::uint64_t, std::size_t> index;
  for (const auto& row : table) {
    auto [it, inserted] = index.try_emplace(row.seed, out.size());
    if (inserted) out.emplace_back(row.seed, std::vector<EpisodeMetrics>{});
    out[it->second].second.push_back(row.metrics);
  }
  return out;
}

double data_efficiency(double e_base, double e_new) {
  if (e_base == 0.0) throw Error(ErrorCode::kDivisionByZero, "data_efficiency: baseline is zero episodes");
  return 100.0 * (e_base - e_new) / e_base;
}

std::optional<double> median_convergence(const std::vector<std::optional<int>>& per_seed) {
  if (per_seed.empty()) return std::nullopt;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> v;
  v.reserve(per_seed.size());
  for (const auto& e : per_seed) v.push_back(e ? static_cast<double>(*e) : inf);
  const double m = percentile_median(std::move(v));
  if (std::isinf(m)) return std::nullopt;
  return m;
}

ConvergenceSummary summarize(std::string name, EnvId env, const MetricsTable& table, double threshold, int window,
                             int budget) {
  ConvergenceSummary s;
  s.name = std::move(name);
  s.env = env;
  s.budget = budget;
  for (const auto& [seed, episodes] : split_by_seed(table)) {
    s.per_seed.push_back(episodes_to_convergence(episodes, threshold, window));
    s.final_moving_average.push_back(moving_average(episodes, window));
  }
  s.median = median_convergence(s.per_seed);
  return s;
}

void write_experiment_outputs(const ExperimentConfig& cfg, const MetricsTable& table,
                              const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string stem(to_string(cfg.algorithm));
  {
    std::ofstream csv(dir / (stem + ".csv"));
    if (!csv) invalid("cannot write " + (dir / (stem + ".csv")).string());
    write_metrics_csv(csv, table);
  }
  nlohmann::json meta = {
      {"environment", std::string(to_string(cfg.env))},
      {"algorithm", stem},
      {"seeds", cfg.seeds},
      {"episodes", cfg.episodes},
      {"convergence", {{"threshold", cfg.convergence_threshold}, {"window", cfg.convergence_window}}},
      {"metrics", stem + ".csv"},
  };
  std::ofstream js(dir / (stem + ".json"));
  js << meta.dump(2) << '\n';
}

void print_report(const std::filesystem::path& dir, std::ostream& out) {
  if (!std::filesystem::is_directory(dir)) invalid("report: '" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> metas;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") metas.push_back(entry.path());
  }
  std::sort(metas.begin(), metas.end());
  if (metas.empty()) invalid("report: no run metadata (*.json) in '" + dir.string() + "'");

  std::vector<ConvergenceSummary> runs;
  for (const auto& path : metas) {
    nlohmann::json meta;
    try {
      std::ifstream in(path);
      meta = nlohmann::json::parse(in);
      std::ifstream csv(dir / meta.at("metrics").get<std::string>());
      if (!csv) invalid("report: missing metrics file for " + path.string());
      const auto table = read_metrics_csv(csv);
      runs.push_back(summarize(meta.at("algorithm").get<std::string>(),
                               parse_env_id(meta.at("environment").get<std::string>()), table,
                               meta.at("convergence").at("threshold").get<double>(),
                               meta.at("convergence").at("window").get<int>(), meta.at("episodes").get<int>()));
    } catch (const nlohmann::json::exception& e) {
      invalid("report: bad metadata in " + path.string() + ": " + e.what());
    }
  }

  auto show = [](const std::optional<double>& v) {
    std::ostringstream s;
    if (v) s << std::fixed << std::setprecision(1) << *v;
    else s << "none";
    return s.str();
  };

  out << std::left << std::setw(18) << "algorithm" << std::setw(24) << "environment" << std::setw(11) << "converged"
      << std::setw(17) << "median_episodes" << "median_final_ma\n";
  for (const auto& r : runs) {
    const auto hit = std::count_if(r.per_seed.begin(), r.per_seed.end(), [](auto& e) { return e.has_value(); });
    std::ostringstream conv;
    conv << hit << '/' << r.per_seed.size();
    std::ostringstream fin;
    fin << std::fixed << std::setprecision(1) << percentile_median(r.final_moving_average);
    out << std::setw(18) << r.name << std::setw(24) << to_string(r.env) << std::setw(11) << conv.str()
        << std::setw(17) << show(r.median) << fin.str() << '\n';
  }

  // Unconverged medians count as the full budget, which understates any
  // reduction measured against them.
  out << "\ndata efficiency (% fewer episodes to converge, row vs column)\n";
  out << std::setw(18) << "";
  for (const auto& c : runs) out << std::setw(18) << c.name;
  out << '\n';
  for (const auto& r : runs) {
    out << std::setw(18) << r.name;
    for (const auto& c : runs) {
      std::string cell = "-";
      if (&r != &c && r.env == c.env) {
        const double base = c.median.value_or(c.budget);
        const double mine = r.median.value_or(r.budget);
        std::ostringstream s;
        s << std::fixed << std::setprecision(1) << data_efficiency(base, mine);
        cell = s.str();
      }
      out << std::setw(18) << cell;
    }
    out << '\n';
  }
}

}  // namespace trl
