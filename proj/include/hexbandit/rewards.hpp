#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hexbandit/simleader.hpp"
#include "hexbandit/world.hpp"

// Reward attribution: turns deployment traces with their realtime feedback
// streams into rewarded training examples. The pipeline is the sign-of-sum
// window rule, heuristic back-propagation within a fixed window, and two
// scenario filters around card interactions.

namespace hexbandit {

struct TraceStep {
  Observation observation;  // view when the action was chosen
  Action action = Action::Stop;
  double wall_time = 0.0;   // action start, seconds
  double behavior_prob = 1.0;
  std::optional<ToggleEvent> toggle;
  bool invalid_set_after = false;
};

// One instruction execution: timed actions plus a timed feedback stream.
struct Trace {
  std::string id;
  uint64_t scenario_seed = 0;
  int round = 0;  // round the trace was collected in; 0 = demonstration
  std::vector<std::string> instruction;
  std::vector<TraceStep> steps;
  std::vector<FeedbackSignal> feedback;
  bool rebooted = false;
  Pose final_pose;

  bool completed() const {
    return !rebooted && !steps.empty() && steps.back().action == Action::Stop;
  }
  bool truncated() const { return !rebooted && !completed(); }
};

// Throws std::invalid_argument when a trace invariant is broken: wall times
// must be strictly increasing, behavior probabilities in (0,1], a rebooted
// trace ends with a -1 signal at reboot time and contains no STOP, and a
// non-rebooted, non-truncated trace ends with STOP.
void validate_trace(const Trace& t);

struct RewardedExample {
  std::string trace_id;
  int step = 0;  // index into the trace's steps
  std::vector<std::string> instruction;
  Observation observation;
  Action action = Action::Stop;
  int reward = 0;       // +1 or -1
  double behavior_prob = 1.0;
  int round = 0;        // rho' of the dataset the example came from
};

using RewardMap = std::map<int, int>;  // step index -> {+1, -1}

// Sign-of-sum reward: step i is rewarded sgn of the feedback signals whose
// delay-shifted times fall in (w_i, w_{i+1}], with w_{n+1} = +infinity.
// Steps with no signals or a zero sum get no entry. `delay` is the human
// response delay constant d.
RewardMap simple_reward(const Trace& t, double delay);

// Back-fills each unrewarded step from the nearest rewarded step within the
// next `window` steps. Steps that are a negatively rewarded STOP, or whose
// toggle made the selected cards unmatchable, never act as sources (they are
// skipped; a farther eligible source within the window may still serve).
// Directly assigned rewards are never overwritten.
RewardMap propagate(const RewardMap& rewards, const Trace& t, int window);

// Scenario filters, applied after propagation:
//  (a) every step strictly after the first card toggle rewarded -1 is dropped;
//  (b) every step whose toggle made the selected cards unmatchable is dropped.
RewardMap apply_scenario_filters(const RewardMap& rewards, const Trace& t);

enum class RewardMode { Simple, Propagated, NoNegative };

RewardMode reward_mode_from_name(const std::string& name);
const char* reward_mode_name(RewardMode mode);

struct RewardConfig {
  double response_delay = 0.2;  // d, seconds
  int propagation_window = 8;
};

// Full pipeline over a batch of traces. Simple: window rule only.
// Propagated: window rule, then propagation with its exceptions, then the
// scenario filters. NoNegative: all -1 signals (reboots included) are
// stripped from the streams first, then the propagated pipeline runs.
// Output order is (trace order, step index).
std::vector<RewardedExample> build_dataset(const std::vector<Trace>& traces,
                                           RewardMode mode, const RewardConfig& config);

// Demonstrations become examples with reward +1, round 0, behavior
// probability 1.
std::vector<RewardedExample> convert_demonstrations(const std::vector<Trace>& demos);

}  // namespace hexbandit
