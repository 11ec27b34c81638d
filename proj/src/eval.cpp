#include "hexbandit/eval.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace hexbandit {

namespace {

std::vector<int> odd_parity_ids(const std::vector<ToggleEvent>& toggles) {
  std::map<int, int> parity;
  for (const ToggleEvent& t : toggles) parity[t.card_id] += 1;
  std::vector<int> out;
  for (const auto& [id, count] : parity)
    if (count % 2 == 1) out.push_back(id);
  return out;  // map iteration is already sorted
}

}  // namespace

ExecutionOutcome outcome_from_trace(const Trace& t) {
  ExecutionOutcome out;
  std::vector<ToggleEvent> toggles;
  for (const TraceStep& s : t.steps)
    if (s.toggle) toggles.push_back(*s.toggle);
  out.net_selected_ids = odd_parity_ids(toggles);
  out.stop_position = t.final_pose.position;
  out.completed = t.completed();
  out.rebooted = t.rebooted;
  out.truncated = t.truncated();
  return out;
}

ExecutionOutcome reference_outcome(const Plan& plan) {
  ExecutionOutcome out;
  for (const PlanTarget& t : plan.targets) out.net_selected_ids.push_back(t.card_id);
  std::sort(out.net_selected_ids.begin(), out.net_selected_ids.end());
  out.stop_position = plan.stop_position;
  out.completed = true;
  return out;
}

double swsd(const ExecutionOutcome& agent, const ExecutionOutcome& reference) {
  if (agent.net_selected_ids != reference.net_selected_ids) return 0.0;
  return 1.0 / (1.0 + hex_distance(agent.stop_position, reference.stop_position));
}

double adjusted_correctness(int total, int completed, const std::vector<bool>& judged) {
  if (total <= 0) throw std::invalid_argument("adjusted_correctness: empty evaluation set");
  if (completed < 0 || completed > total)
    throw std::invalid_argument("adjusted_correctness: completed out of range");
  if (completed == 0) return 0.0;
  if (judged.empty()) throw std::invalid_argument("adjusted_correctness: no judgments");
  double correct = 0.0;
  for (bool b : judged) correct += b ? 1.0 : 0.0;
  return (correct / static_cast<double>(judged.size())) *
         (static_cast<double>(completed) / static_cast<double>(total));
}

bool ground_truth_judge(const Trace& t, const Plan& plan, int stop_tolerance) {
  if (!t.completed()) return false;
  ExecutionOutcome agent = outcome_from_trace(t);
  ExecutionOutcome ref = reference_outcome(plan);
  if (agent.net_selected_ids != ref.net_selected_ids) return false;
  return hex_distance(agent.stop_position, ref.stop_position) <= stop_tolerance;
}

FeedbackStats feedback_stats(const std::vector<Trace>& traces) {
  FeedbackStats stats;
  long positives = 0, negatives = 0, reboots = 0;
  for (const Trace& t : traces) {
    stats.total_traces += 1;
    stats.total_actions += static_cast<long>(t.steps.size());
    if (t.rebooted) reboots += 1;
    for (const FeedbackSignal& f : t.feedback) (f.sign > 0 ? positives : negatives) += 1;
  }
  if (stats.total_actions > 0) {
    stats.positive_rate = static_cast<double>(positives) / stats.total_actions;
    stats.negative_rate = static_cast<double>(negatives) / stats.total_actions;
  }
  if (stats.total_traces > 0)
    stats.reboot_rate = static_cast<double>(reboots) / stats.total_traces;
  if (negatives > 0)
    stats.pos_neg_ratio = static_cast<double>(positives) / static_cast<double>(negatives);
  return stats;
}

}  // namespace hexbandit
