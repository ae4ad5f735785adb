#pragma once

// Three-state deterministic chain used by the tabular checks.
//   left:  s -> max(s - 1, 0), reward 0
//   right: s -> s + 1, reward 0; right from the last state ends the episode
//          with reward 1.

#include <algorithm>
#include <array>
#include <cstdint>

#include "trl/env.hpp"
#include "trl/tile_coder.hpp"

namespace trl::oracle {

inline constexpr int kChainStates = 3;
inline constexpr int kChainActions = 2;  // 0 = left (-1.0), 1 = right (+1.0)

struct ChainStep {
  int next = 0;
  double reward = 0.0;
  bool terminal = false;
};

inline ChainStep chain_step(int s, int a) {
  if (a == 0) return {std::max(s - 1, 0), 0.0, false};
  if (s == kChainStates - 1) return {s, 1.0, true};
  return {s + 1, 0.0, false};
}

inline int chain_action_index(double action) { return action > 0.0 ? 1 : 0; }

/// One-hot features over (state, action); the "tile coder" of a finite MDP.
class OneHotChainFeatures final : public FeatureMap {
 public:
  using FeatureMap::encode;
  std::size_t size() const override { return kChainStates * kChainActions; }
  std::size_t active_count() const override { return 1; }
  void encode(const Observation& obs, double action, FeatureSet& out) const override {
    out.assign(1, static_cast<std::uint32_t>(static_cast<int>(obs[0]) * kChainActions + chain_action_index(action)));
  }
};

inline Observation chain_obs(int s) {
  Observation o;
  o.dim = 1;
  o[0] = static_cast<double>(s);
  return o;
}

class ChainEnv final : public Environment {
 public:
  explicit ChainEnv(int max_steps = 10) {
    spec_.id = EnvId::kCartPole;  // unused by the tabular code paths
    spec_.obs_dim = 1;
    spec_.max_steps_per_episode = max_steps;
    spec_.obs_low = {0.0};
    spec_.obs_high = {static_cast<double>(kChainStates - 1)};
  }

  const EnvSpec& spec() const override { return spec_; }
  Observation reset(std::uint64_t seed) override {
    s_ = static_cast<int>(seed % kChainStates);
    steps_ = 0;
    done_ = false;
    return chain_obs(s_);
  }
  StepResult step(double action) override {
    const auto r = chain_step(s_, chain_action_index(action));
    s_ = r.next;
    ++steps_;
    done_ = r.terminal || steps_ >= spec_.max_steps_per_episode;
    return {chain_obs(s_), r.reward, r.terminal, !r.terminal && steps_ >= spec_.max_steps_per_episode};
  }
  void set_state(const Observation& obs) override { s_ = static_cast<int>(obs[0]); }
  Observation state() const override { return chain_obs(s_); }
  int steps_taken() const override { return steps_; }

 private:
  EnvSpec spec_;
  int s_ = 0;
  int steps_ = 0;
  bool done_ = false;
};

}  // namespace trl::oracle
