#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hexbandit/rewards.hpp"
#include "hexbandit/rng.hpp"
#include "hexbandit/simleader.hpp"
#include "hexbandit/world.hpp"

// Featurized log-linear policy over the five actions, with executable-action
// masking, analytic log-probability gradients, and vote-based ensemble
// inference.

namespace hexbandit {

constexpr size_t kNumActions = 5;
using ActionMask = std::array<bool, kNumActions>;
using ActionDistribution = std::array<double, kNumActions>;

ActionMask mask_from_actions(const std::vector<Action>& actions);

struct PolicyParams {
  Eigen::VectorXd weights;

  explicit PolicyParams(Eigen::Index dim = 0) : weights(Eigen::VectorXd::Zero(dim)) {}
  Eigen::Index dim() const { return weights.size(); }
};

// Sparse feature vector; duplicate indices accumulate additively.
struct FeatureVector {
  std::vector<std::pair<uint32_t, double>> entries;

  void add(uint32_t index, double value) { entries.emplace_back(index, value); }
  double dot(const Eigen::VectorXd& w) const;
};

// Deterministic hashed features of (instruction, observation, action):
// instruction n-grams, egocentric direction/distance buckets of every known
// card computed in the agent frame, instruction-descriptor matches, the
// under-foot card, and remaining-target counts, each conjoined with the
// action identity. Rotating the world and the agent together leaves the
// features unchanged.
FeatureVector featurize(const std::vector<std::string>& instruction, const Observation& o,
                        Action a, uint32_t feature_dim);

// Softmax over the masked-in actions' scores; masked-out actions get exactly
// probability zero.
ActionDistribution action_distribution(const PolicyParams& p,
                                       const std::vector<std::string>& instruction,
                                       const Observation& o, const ActionMask& mask);
ActionDistribution distribution_from_features(
    const PolicyParams& p, const std::array<FeatureVector, kNumActions>& features,
    const ActionMask& mask);

// Analytic gradient of log pi(a | .): phi(a) - sum_b pi(b) phi(b). Throws if
// `a` is masked out.
FeatureVector logprob_grad(const PolicyParams& p, const std::vector<std::string>& instruction,
                           const Observation& o, Action a, const ActionMask& mask);
FeatureVector logprob_grad_from_features(const PolicyParams& p,
                                         const std::array<FeatureVector, kNumActions>& features,
                                         Action a, const ActionMask& mask);

struct Ensemble {
  std::vector<PolicyParams> members;

  size_t size() const { return members.size(); }
};

// Per-member argmax over the masked-in actions, ties broken by action order.
Action member_argmax(const PolicyParams& p, const std::vector<std::string>& instruction,
                     const Observation& o, const ActionMask& mask);

// Voting inference: pi(a) proportional to exp(#members whose argmax is a),
// masked-out actions zero.
ActionDistribution ensemble_distribution(const Ensemble& e,
                                         const std::vector<std::string>& instruction,
                                         const Observation& o, const ActionMask& mask);

// Any deployment-time action distribution (single member, ensemble, scripted).
using DistributionSource = std::function<ActionDistribution(
    const std::vector<std::string>&, const Observation&, const ActionMask&)>;

DistributionSource ensemble_source(const Ensemble& e);
DistributionSource greedy_source(const PolicyParams& p);

// Samples actions from `source` until STOP, a leader reboot, or max_steps,
// recording observations, wall times, behavior probabilities and the card
// bookkeeping the reward pipeline needs. A reboot appends a -1 signal at the
// time the offending action finished.
Trace sample_rollout(const DistributionSource& source, const Scenario& scenario,
                     LeaderOracle& oracle, Rng& rng, int max_steps,
                     const std::string& trace_id, int round);

// Replays the scenario's optimal plan as a demonstration trace: behavior
// probability 1, no feedback, round 0.
Trace demonstration_trace(const Scenario& scenario, const std::string& trace_id);

// Outcome of running a policy on a scenario without a leader (validation).
struct RolloutOutcome {
  std::vector<ToggleEvent> toggles;
  AxialCoord stop_position;
  bool completed = false;
  int steps = 0;
};
RolloutOutcome greedy_outcome(const PolicyParams& p, const Scenario& scenario, int max_steps);

// Checkpoints: binary, header (feature dim, seed, round), bit-exact round trip.
void save_checkpoint(const std::string& path, const PolicyParams& params, uint64_t seed,
                     int round);
struct Checkpoint {
  PolicyParams params;
  uint64_t seed = 0;
  int round = 0;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hexbandit
