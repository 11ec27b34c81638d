#pragma once

#include <optional>
#include <vector>

#include "hexbandit/rewards.hpp"
#include "hexbandit/simleader.hpp"

// Metrics: success weighted by stopping distance, reboot-adjusted
// correctness, a ground-truth judge standing in for human annotators, and
// raw feedback statistics.

namespace hexbandit {

struct ExecutionOutcome {
  std::vector<int> net_selected_ids;  // card ids toggled an odd number of times, sorted
  AxialCoord stop_position;
  bool completed = false;
  bool rebooted = false;
  bool truncated = false;
};

ExecutionOutcome outcome_from_trace(const Trace& t);
ExecutionOutcome reference_outcome(const Plan& plan);

// Card-set-match indicator divided by (1 + hex distance between stops).
double swsd(const ExecutionOutcome& agent, const ExecutionOutcome& reference);

// (judged-correct fraction of completed executions) * (completed fraction).
// All rebooted or truncated executions count against the completed fraction.
// `judged` holds one verdict per evaluated completed execution. Zero total is
// rejected; zero completed yields 0 by convention.
double adjusted_correctness(int total, int completed, const std::vector<bool>& judged);

// True iff the trace completed, exactly the plan's targets were toggled
// (net), and the stop position is within `stop_tolerance` hexes of the
// intended stop.
bool ground_truth_judge(const Trace& t, const Plan& plan, int stop_tolerance = 0);

struct FeedbackStats {
  double positive_rate = 0.0;  // positive signals per action
  double negative_rate = 0.0;
  double reboot_rate = 0.0;    // rebooted traces per trace
  std::optional<double> pos_neg_ratio;
  long total_actions = 0;
  long total_traces = 0;
};

// Rates over the raw streams, before any reward processing.
FeedbackStats feedback_stats(const std::vector<Trace>& traces);

}  // namespace hexbandit
