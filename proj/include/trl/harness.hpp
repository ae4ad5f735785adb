#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trl/a3c.hpp"
#include "trl/env.hpp"
#include "trl/hybrid.hpp"
#include "trl/metrics.hpp"
#include "trl/sarsa.hpp"
#include "trl/teacher.hpp"

namespace trl {

enum class Algorithm { kSarsa, kA3c, kHybridSarsa, kHybridA3c };

std::string_view to_string(Algorithm a);
/// "sarsa", "a3c", "hybrid-sarsa-il", "hybrid-a3c-il".
Algorithm parse_algorithm(std::string_view name);
bool is_hybrid(Algorithm a);

enum class FeedbackSourceKind { kOracle, kLive };

struct TilingConfig {
  int num_tilings = 8;
  int tiles_per_dim = 8;
};

struct LiveConfig {
  int state_decimation = 2;   // broadcast every n-th environment step
  bool realtime = true;       // pace steps at step_period of wall time
};

struct ExperimentConfig {
  EnvId env = EnvId::kCartPole;
  Algorithm algorithm = Algorithm::kSarsa;
  std::vector<std::uint64_t> seeds{0};
  int episodes = 500;
  double convergence_threshold = 400.0;
  int convergence_window = 20;
  // End a seed's run as soon as it converges (saves time when only
  // episodes-to-convergence matters).
  bool stop_on_convergence = false;

  TilingConfig tiling;
  SarsaConfig sarsa;
  A3cConfig a3c;
  FeedbackSettings feedback;
  TeacherProfile teacher;
  PdGains gains;
  FeedbackSourceKind feedback_source = FeedbackSourceKind::kOracle;
  LiveConfig live;

  std::string output_dir = "runs";
  bool record_wall_clock = true;
  bool save_checkpoints = false;

  /// Throws kInvalidConfig with the offending field in the message.
  void validate() const;
};

/// Sensible per-environment defaults, including the convergence threshold
/// (cart-pole 400, mountain car -150, window 20).
ExperimentConfig default_experiment(EnvId env, Algorithm algorithm);

struct MetricsRow {
  std::uint64_t seed = 0;
  EpisodeMetrics metrics;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

using MetricsTable = std::vector<MetricsRow>;

/// Optional plumbing for a session. A null source means the simulated
/// teacher from cfg.teacher.
struct SessionIo {
  FeedbackSource* source = nullptr;
  StepObserver* observer = nullptr;
  std::optional<std::filesystem::path> checkpoint_dir;
};

/// One independent training session (one seed).
std::vector<EpisodeMetrics> run_session(const ExperimentConfig& cfg, std::uint64_t seed, const SessionIo& io = {});

enum class Execution { kSerial, kParallel };

/// Every seed independently, rows grouped by seed in seed-list order. The
/// parallel path runs seeds under OpenMP; kSerial is the reference loop.
MetricsTable run_experiment(const ExperimentConfig& cfg, Execution execution = Execution::kParallel);

void write_metrics_csv(std::ostream& out, const MetricsTable& table);
MetricsTable read_metrics_csv(std::istream& in);

/// Per-seed episodes grouped back out of a table, in first-seen seed order.
std::vector<std::pair<std::uint64_t, std::vector<EpisodeMetrics>>> split_by_seed(const MetricsTable& table);

/// 100 * (e_base - e_new) / e_base. Throws kDivisionByZero when e_base == 0.
double data_efficiency(double e_base, double e_new);

/// Median with unconverged seeds ranked as +infinity; nullopt when the median
/// itself is unconverged.
std::optional<double> median_convergence(const std::vector<std::optional<int>>& per_seed);

struct ConvergenceSummary {
  std::string name;
  EnvId env = EnvId::kCartPole;
  int budget = 0;
  std::vector<std::optional<int>> per_seed;
  std::optional<double> median;
  std::vector<double> final_moving_average;  // per seed, over the last window
};

ConvergenceSummary summarize(std::string name, EnvId env, const MetricsTable& table, double threshold, int window,
                             int budget);

/// Writes <dir>/<algorithm>.csv and <dir>/<algorithm>.json (run metadata).
void write_experiment_outputs(const ExperimentConfig& cfg, const MetricsTable& table,
                              const std::filesystem::path& dir);

/// Reads every run in `dir` and prints the convergence and pairwise
/// data-efficiency tables.
void print_report(const std::filesystem::path& dir, std::ostream& out);

}  // namespace trl
