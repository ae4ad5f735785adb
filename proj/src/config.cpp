#include "trl/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <type_traits>

#include "trl/errors.hpp"

namespace trl {

namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); }

void expect_object(const json& doc, const std::string& where, std::initializer_list<const char*> keys) {
  if (!doc.is_object()) invalid(where + ": expected an object");
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& [key, _] : doc.items()) {
    if (!known.count(key)) invalid(where + ": unknown key '" + key + "'");
  }
}

std::string path_of(const std::string& where, const char* key) { return where.empty() ? key : where + "." + key; }

template <class T>
void read(const json& doc, const std::string& where, const char* key, T& out) {
  auto it = doc.find(key);
  if (it == doc.end()) return;
  if constexpr (std::is_same_v<T, double>) {
    if (!it->is_number()) invalid(path_of(where, key) + ": expected a number");
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!it->is_boolean()) invalid(path_of(where, key) + ": expected true or false");
  } else if constexpr (std::is_integral_v<T>) {
    if (!it->is_number_integer()) invalid(path_of(where, key) + ": expected an integer");
  }
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    invalid(path_of(where, key) + ": wrong type");
  }
}

template <class T>
void read_optional(const json& doc, const std::string& where, const char* key, std::optional<T>& out) {
  auto it = doc.find(key);
  if (it == doc.end()) return;
  if (it->is_null()) {
    out.reset();
    return;
  }
  T value{};
  read(doc, where, key, value);
  out = value;
}

void parse_epsilon(const json& doc, const std::string& where, EpsilonSchedule& eps) {
  if (doc.is_number()) {
    eps = EpsilonSchedule{doc.get<double>(), 1.0, 0.0};
    return;
  }
  expect_object(doc, where, {"initial", "decay", "minimum"});
  read(doc, where, "initial", eps.initial);
  read(doc, where, "decay", eps.decay);
  read(doc, where, "minimum", eps.minimum);
}

void parse_sarsa(const json& doc, SarsaConfig& cfg) {
  const std::string w = "sarsa";
  expect_object(doc, w, {"alpha", "discount", "lambda", "epsilon", "action_grid", "trace_cutoff", "initial_q"});
  read(doc, w, "alpha", cfg.alpha);
  read(doc, w, "discount", cfg.discount);
  read(doc, w, "lambda", cfg.lambda);
  read(doc, w, "action_grid", cfg.action_grid);
  read(doc, w, "trace_cutoff", cfg.trace_cutoff);
  read(doc, w, "initial_q", cfg.initial_q);
  if (doc.contains("epsilon")) parse_epsilon(doc["epsilon"], "sarsa.epsilon", cfg.epsilon);
}

void parse_a3c(const json& doc, A3cConfig& cfg) {
  const std::string w = "a3c";
  expect_object(doc, w,
                {"num_workers", "rollout_length", "discount", "actor_lr", "critic_lr", "entropy_coef",
                 "max_global_steps", "hidden", "init_log_std", "log_std_min", "log_std_max", "optimizer",
                 "rms_decay", "rms_epsilon", "max_grad_norm", "reward_scale"});
  read(doc, w, "num_workers", cfg.num_workers);
  read(doc, w, "rollout_length", cfg.rollout_length);
  read(doc, w, "discount", cfg.discount);
  read(doc, w, "actor_lr", cfg.actor_lr);
  read(doc, w, "critic_lr", cfg.critic_lr);
  read(doc, w, "entropy_coef", cfg.entropy_coef);
  read(doc, w, "max_global_steps", cfg.max_global_steps);
  read(doc, w, "init_log_std", cfg.init_log_std);
  read(doc, w, "log_std_min", cfg.log_std_min);
  read(doc, w, "log_std_max", cfg.log_std_max);
  read(doc, w, "rms_decay", cfg.rms_decay);
  read(doc, w, "rms_epsilon", cfg.rms_epsilon);
  read(doc, w, "max_grad_norm", cfg.max_grad_norm);
  read(doc, w, "reward_scale", cfg.reward_scale);
  if (auto it = doc.find("hidden"); it != doc.end()) {
    if (!it->is_array()) invalid("a3c.hidden: expected an array of layer widths");
    cfg.hidden.clear();
    for (const auto& h : *it) {
      if (!h.is_number_integer() || h.get<long long>() < 1) invalid("a3c.hidden: widths must be positive integers");
      cfg.hidden.push_back(h.get<std::size_t>());
    }
  }
  if (auto it = doc.find("optimizer"); it != doc.end()) {
    const auto name = it->is_string() ? it->get<std::string>() : "";
    if (name == "rmsprop") cfg.optimizer = Optimizer::kRmsProp;
    else if (name == "sgd") cfg.optimizer = Optimizer::kSgd;
    else invalid("a3c.optimizer: expected \"rmsprop\" or \"sgd\"");
  }
}

void parse_gains(const json& doc, PdGains& g) {
  const std::string w = "teacher.gains";
  expect_object(doc, w, {"angle", "angular_velocity", "position", "velocity"});
  read(doc, w, "angle", g.angle);
  read(doc, w, "angular_velocity", g.angular_velocity);
  read(doc, w, "position", g.position);
  read(doc, w, "velocity", g.velocity);
}

void parse_teacher(const json& doc, TeacherProfile& t, PdGains& gains) {
  const std::string w = "teacher";
  expect_object(doc, w, {"p_give", "p_flip", "delay", "withdraw_after", "withdraw_duration", "tolerance", "gains"});
  read(doc, w, "p_give", t.p_give);
  read(doc, w, "p_flip", t.p_flip);
  read_optional(doc, w, "withdraw_after", t.withdraw_after);
  read(doc, w, "withdraw_duration", t.withdraw_duration);
  read(doc, w, "tolerance", t.tolerance);
  if (doc.contains("delay")) t.delay = parse_delay(doc["delay"], "teacher.delay");
  if (doc.contains("gains")) parse_gains(doc["gains"], gains);
}

}  // namespace

DelayDistribution parse_delay(const json& doc, const std::string& where) {
  expect_object(doc, where, {"kind", "steps", "min", "max", "shape", "scale", "horizon"});
  if (!doc.contains("kind") || !doc["kind"].is_string()) invalid(where + ".kind: required string");
  const auto kind = doc["kind"].get<std::string>();
  int horizon = 50;
  read(doc, where, "horizon", horizon);
  auto need = [&](const char* key) {
    double v = 0.0;
    if (!doc.contains(key)) invalid(path_of(where, key) + ": required for kind '" + kind + "'");
    read(doc, where, key, v);
    return v;
  };
  if (kind == "delta") return DelayDistribution::delta(need("steps"), horizon);
  if (kind == "uniform") return DelayDistribution::uniform(need("min"), need("max"), horizon);
  if (kind == "gamma") return DelayDistribution::gamma(need("shape"), need("scale"), horizon);
  invalid(where + ".kind: expected delta, uniform or gamma");
}

json delay_to_json(const DelayDistribution& d) {
  switch (d.kind()) {
    case DelayDistribution::Kind::kDelta:
      return {{"kind", "delta"}, {"steps", d.param_a()}, {"horizon", d.horizon()}};
    case DelayDistribution::Kind::kUniform:
      return {{"kind", "uniform"}, {"min", d.param_a()}, {"max", d.param_b()}, {"horizon", d.horizon()}};
    case DelayDistribution::Kind::kGamma:
      return {{"kind", "gamma"}, {"shape", d.param_a()}, {"scale", d.param_b()}, {"horizon", d.horizon()}};
  }
  return {};
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  try {
    if (auto dots = text.find(".."); dots != std::string::npos) {
      std::size_t used = 0;
      const auto lo = std::stoull(text.substr(0, dots), &used);
      if (used != dots) invalid("seeds: malformed range '" + text + "'");
      const auto rest = text.substr(dots + 2);
      const auto hi = std::stoull(rest, &used);
      if (used != rest.size() || hi < lo) invalid("seeds: malformed range '" + text + "'");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    } else {
      std::size_t start = 0;
      while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        std::size_t used = 0;
        out.push_back(std::stoull(item, &used));
        if (used != item.size()) invalid("seeds: malformed entry '" + item + "'");
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    }
  } catch (const std::logic_error&) {
    invalid("seeds: malformed list '" + text + "'");
  }
  if (out.empty()) invalid("seeds: empty list");
  return out;
}

ExperimentConfig parse_experiment_config(const json& doc) {
  expect_object(doc, "config",
                {"environment", "algorithm", "seeds", "episodes", "convergence", "output", "tiling", "sarsa", "a3c",
                 "supervised", "feedback_model", "delay", "teacher", "session", "live"});
  if (!doc.contains("environment") || !doc["environment"].is_string()) invalid("environment: required string");
  if (!doc.contains("algorithm") || !doc["algorithm"].is_string()) invalid("algorithm: required string");

  ExperimentConfig cfg = default_experiment(parse_env_id(doc["environment"].get<std::string>()),
                                            parse_algorithm(doc["algorithm"].get<std::string>()));
  if (auto it = doc.find("seeds"); it != doc.end()) {
    if (it->is_string()) {
      cfg.seeds = parse_seed_list(it->get<std::string>());
    } else if (it->is_array()) {
      cfg.seeds.clear();
      for (const auto& s : *it) {
        if (!s.is_number_unsigned()) invalid("seeds: entries must be non-negative integers");
        cfg.seeds.push_back(s.get<std::uint64_t>());
      }
    } else {
      invalid("seeds: expected an array or a range string");
    }
  }
  read(doc, "", "episodes", cfg.episodes);

  if (auto it = doc.find("convergence"); it != doc.end()) {
    expect_object(*it, "convergence", {"threshold", "window", "stop_on_convergence"});
    read(*it, "convergence", "threshold", cfg.convergence_threshold);
    read(*it, "convergence", "window", cfg.convergence_window);
    read(*it, "convergence", "stop_on_convergence", cfg.stop_on_convergence);
  }
  if (auto it = doc.find("output"); it != doc.end()) {
    expect_object(*it, "output", {"dir", "record_wall_clock", "save_checkpoints"});
    read(*it, "output", "dir", cfg.output_dir);
    read(*it, "output", "record_wall_clock", cfg.record_wall_clock);
    read(*it, "output", "save_checkpoints", cfg.save_checkpoints);
  }
  if (auto it = doc.find("tiling"); it != doc.end()) {
    expect_object(*it, "tiling", {"num_tilings", "tiles_per_dim"});
    read(*it, "tiling", "num_tilings", cfg.tiling.num_tilings);
    read(*it, "tiling", "tiles_per_dim", cfg.tiling.tiles_per_dim);
  }
  if (doc.contains("sarsa")) parse_sarsa(doc["sarsa"], cfg.sarsa);
  if (doc.contains("a3c")) parse_a3c(doc["a3c"], cfg.a3c);
  if (auto it = doc.find("supervised"); it != doc.end()) {
    expect_object(*it, "supervised", {"k", "supervised_rate"});
    read(*it, "supervised", "k", cfg.feedback.supervised.k);
    read(*it, "supervised", "supervised_rate", cfg.feedback.supervised.supervised_rate);
  }
  if (auto it = doc.find("feedback_model"); it != doc.end()) {
    expect_object(*it, "feedback_model", {"bias_rate", "rate_cap", "predictor_shaping", "shaping_scale"});
    read(*it, "feedback_model", "bias_rate", cfg.feedback.bias_rate);
    read(*it, "feedback_model", "rate_cap", cfg.feedback.rate_cap);
    read(*it, "feedback_model", "predictor_shaping", cfg.feedback.predictor_shaping);
    read(*it, "feedback_model", "shaping_scale", cfg.feedback.shaping_scale);
  }
  if (doc.contains("teacher")) parse_teacher(doc["teacher"], cfg.teacher, cfg.gains);
  // The credit model defaults to the simulated teacher's true delay.
  cfg.feedback.credit_delay = doc.contains("delay") ? parse_delay(doc["delay"], "delay") : cfg.teacher.delay;
  if (auto it = doc.find("session"); it != doc.end()) {
    expect_object(*it, "session", {"step_period", "feedback_source"});
    read(*it, "session", "step_period", cfg.feedback.step_period);
    if (it->contains("feedback_source")) {
      const auto& v = (*it)["feedback_source"];
      const auto name = v.is_string() ? v.get<std::string>() : "";
      if (name == "oracle") cfg.feedback_source = FeedbackSourceKind::kOracle;
      else if (name == "live") cfg.feedback_source = FeedbackSourceKind::kLive;
      else invalid("session.feedback_source: expected \"oracle\" or \"live\"");
    }
  }
  if (auto it = doc.find("live"); it != doc.end()) {
    expect_object(*it, "live", {"state_decimation", "realtime"});
    read(*it, "live", "state_decimation", cfg.live.state_decimation);
    read(*it, "live", "realtime", cfg.live.realtime);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    invalid("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_experiment_config(doc);
}

}  // namespace trl
