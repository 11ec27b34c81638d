#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hexbandit/rng.hpp"
#include "hexbandit/world.hpp"

// Scripted leader standing in for a human user: generates scenarios with a
// ground-truth plan and a templated instruction, critiques each executed
// action with delayed noisy binary feedback, and reboots the follower when it
// strays too far.

namespace hexbandit {

struct FeedbackSignal {
  int sign = 0;       // +1 or -1
  double wall_time = 0.0;
  bool operator==(const FeedbackSignal&) const = default;
};

struct OracleConfig {
  double feedback_prob = 0.65;   // chance of a signal after each action
  double delay_min = 0.3;        // seconds between action start and feedback
  double delay_max = 1.0;
  double sign_error_rate = 0.07; // chance the sign is flipped
  int reboot_deviation = 3;      // hex distance from every plan waypoint
};

struct PlanTarget {
  int card_id = 0;
  AxialCoord position;
};

struct Plan {
  std::vector<PlanTarget> targets;     // cards to toggle, in order
  AxialCoord stop_position;            // where the follower should STOP
  std::vector<Action> optimal_actions; // executable from the start state, ends with STOP
  std::vector<AxialCoord> waypoints;   // cells along the optimal path, start included
};

struct ScenarioConfig {
  WorldConfig world;
  int max_targets = 2;
  double preselect_prob = 0.5;   // chance the leader pre-selected one card
  int max_plan_actions = 20;     // STOP included
};

struct Scenario {
  uint64_t seed = 0;
  WorldState state;
  Plan plan;
  std::vector<std::string> instruction;
};

// Deterministic in (seed, config). The plan's action sequence is verified
// executable by replay before returning.
Scenario generate_scenario(uint64_t seed, const ScenarioConfig& config);

// Distance field over (position, heading) states: minimum number of
// FORWARD/BACKWARD/LEFT/RIGHT actions to stand on `goal`. Obstacle cells can
// be neither entered nor stood upon; `no_entry` cells (card cells, normally)
// may be stood upon and left but not entered, except for `goal` itself.
// Unreachable states hold kUnreachable.
inline constexpr int kUnreachable = 1 << 28;
std::vector<int> goal_distances(int grid_edge, const std::set<AxialCoord>& obstacles,
                                const std::set<AxialCoord>& no_entry, AxialCoord goal);
int state_index(int grid_edge, AxialCoord pos, int heading);

// Executes a scenario's optimal actions through apply_action, returning the
// visited states (index i = state before action i). Throws if the plan is
// not executable.
std::vector<WorldState> replay_states(const Scenario& scenario);

// Per-episode oracle. Consumes one rng stream; deterministic given the
// execution prefix it has been shown.
class LeaderOracle {
 public:
  LeaderOracle(const Plan& plan, const OracleConfig& config, uint64_t seed);

  // Call once per executed action, after the world update. Grades the action
  // against a shortest-path policy toward the plan's next subgoal; emits a
  // signal with probability feedback_prob, delayed and possibly sign-flipped.
  std::optional<FeedbackSignal> emit_feedback(const WorldState& before, Action action,
                                              const StepResult& after,
                                              double action_start_time);

  // True when the follower is farther than the deviation threshold from
  // every plan waypoint, or when it newly selects a card outside the plan.
  // Deselecting a card the follower itself had wrongly selected counts as a
  // correction, not a stray toggle.
  bool maybe_reboot(const StepResult& after) const;

  // +1/-1 grade of an action before noise; exposed for tests.
  int grade_action(const WorldState& before, Action action, const StepResult& after);

  int targets_done() const;

 private:
  const Plan& plan_;
  OracleConfig config_;
  Rng rng_;
  std::vector<int> toggle_parity_;       // per plan target
  std::vector<int> stray_selected_ids_;  // non-plan cards the follower selected
  bool last_toggle_was_stray_selection_ = false;

  // distance-field cache, invalidated when the card layout changes
  std::vector<int> dist_;
  AxialCoord dist_goal_{};
  uint64_t dist_board_hash_ = 0;
  bool dist_valid_ = false;

  const std::vector<int>& distances_to(const WorldState& s, AxialCoord goal);
  void note_toggle(const ToggleEvent& t);
};

// Follower-side instruction parsing: property descriptors mentioned in the
// instruction, used by the featurizer.
struct CardDescriptor {
  int color = -1;  // -1 = unspecified
  int shape = -1;
  int count = -1;
};
std::vector<CardDescriptor> parse_descriptors(const std::vector<std::string>& tokens);

bool matches_descriptor(const Card& card, const CardDescriptor& d);

}  // namespace hexbandit
