#pragma once

#include <memory>

#include "probplan/domains/simulator.hpp"
#include "probplan/grounding/mlp.hpp"
#include "probplan/grounding/model.hpp"

namespace probplan {

struct NoisyOracleConfig {
  enum class Mode { flip, logit };
  Mode mode = Mode::flip;
  double flip_prob = 0.2;
  double logit_sigma = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (flip_prob < 0.0 || flip_prob >= 0.5) {
      throw std::invalid_argument("flip probability must lie in [0, 0.5)");
    }
    if (logit_sigma < 0.0) {
      throw std::invalid_argument("logit sigma must be non-negative");
    }
  }
};

// Corrupts a ground-truth symbolic state into a soft belief. The per-atom
// noise (which atoms misread, and by how much) is drawn once from
// (config seed, salt) and is independent of the state, mirroring a poorly
// trained grounding model: a deterministic function of the input that
// consistently misreads the same atoms. Grounding any state twice within
// one episode salt therefore returns identical marginals, and all methods
// of a paired comparison see the same noise, while different episodes
// decorrelate.
inline BeliefState apply_grounding_noise(const SymbolicState& truth,
                                         const NoisyOracleConfig& cfg,
                                         std::uint64_t salt = 0) {
  cfg.validate();
  Rng rng(mix_seed(cfg.seed, salt));
  BeliefState belief(truth.universe());
  for (AtomId id = 0; id < belief.size(); ++id) {
    bool bit = truth.test(id);
    if (cfg.mode == NoisyOracleConfig::Mode::flip) {
      if (rng.bernoulli(cfg.flip_prob)) bit = !bit;
      const double u = rng.uniform(0.0, 0.05);
      belief.set(id, bit ? 0.9 - u : 0.1 + u);
    } else {
      const double offset = cfg.logit_sigma * rng.normal();
      const double p = bit ? 0.98 : 0.02;  // clamp of {0,1} into [0.02, 0.98]
      belief.set(id, sigmoid(std::log(p / (1.0 - p)) + offset));
    }
  }
  return belief;
}

// Deterministic belief from the simulator's true symbolic state.
inline BeliefState oracle_ground(const WorldState& world) {
  return BeliefState::from_symbolic(world.symbolic);
}

inline BeliefState noisy_ground(const WorldState& world, const NoisyOracleConfig& cfg,
                                std::uint64_t salt = 0) {
  return apply_grounding_noise(world.symbolic, cfg, salt);
}

// Perfect grounding: geometric reconstruction of the symbolic state from
// poses, embedded as a 0/1 belief.
class OracleGrounding : public GroundingModel {
 public:
  explicit OracleGrounding(std::shared_ptr<const Simulator> sim) : sim_(std::move(sim)) {}

  BeliefState ground(const ContinuousState& state) const override {
    return BeliefState::from_symbolic(sim_->reconstruct(state));
  }

 private:
  std::shared_ptr<const Simulator> sim_;
};

class NoisyOracleGrounding : public GroundingModel {
 public:
  NoisyOracleGrounding(std::shared_ptr<const Simulator> sim, NoisyOracleConfig cfg,
                       std::uint64_t salt = 0)
      : sim_(std::move(sim)), cfg_(cfg), salt_(salt) {
    cfg_.validate();
  }

  BeliefState ground(const ContinuousState& state) const override {
    return apply_grounding_noise(sim_->reconstruct(state), cfg_, salt_);
  }

 private:
  std::shared_ptr<const Simulator> sim_;
  NoisyOracleConfig cfg_;
  std::uint64_t salt_;
};

// Goal belief from a demonstration: grounds the final frame; smooth_frames
// > 1 averages the beliefs of the last k frames instead.
inline BeliefState ground_demo_goal(const GroundingModel& model,
                                    const Demonstration& demo, int smooth_frames = 1) {
  if (demo.frames.empty()) {
    throw std::invalid_argument("cannot ground an empty demonstration");
  }
  if (smooth_frames < 1) {
    throw std::invalid_argument("smoothing window must be at least 1");
  }
  const int k = std::min<int>(smooth_frames, static_cast<int>(demo.frames.size()));
  BeliefState goal = model.ground(demo.frames.back());
  if (k == 1) return goal;

  std::vector<double> sum(goal.size(), 0.0);
  for (int i = 0; i < k; ++i) {
    const BeliefState b = model.ground(demo.frames[demo.frames.size() - 1 - i]);
    for (AtomId id = 0; id < b.size(); ++id) sum[id] += b[id];
  }
  BeliefState smoothed(goal.universe());
  for (AtomId id = 0; id < smoothed.size(); ++id) {
    smoothed.set(id, sum[id] / static_cast<double>(k));
  }
  return smoothed;
}

}  // namespace probplan
