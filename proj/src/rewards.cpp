#include "hexbandit/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hexbandit {

void validate_trace(const Trace& t) {
  if (t.steps.empty()) throw std::invalid_argument("trace " + t.id + ": no steps");
  for (size_t i = 0; i + 1 < t.steps.size(); ++i)
    if (!(t.steps[i].wall_time < t.steps[i + 1].wall_time))
      throw std::invalid_argument("trace " + t.id + ": wall times not strictly increasing");
  for (const TraceStep& s : t.steps) {
    if (!(s.behavior_prob > 0.0 && s.behavior_prob <= 1.0))
      throw std::invalid_argument("trace " + t.id + ": behavior prob outside (0,1]");
  }
  for (size_t i = 0; i < t.steps.size(); ++i)
    if (t.steps[i].action == Action::Stop && i + 1 != t.steps.size())
      throw std::invalid_argument("trace " + t.id + ": STOP before the final step");
  if (t.rebooted) {
    if (!t.steps.empty() && t.steps.back().action == Action::Stop)
      throw std::invalid_argument("trace " + t.id + ": rebooted trace ends with STOP");
    if (t.feedback.empty() || t.feedback.back().sign != -1)
      throw std::invalid_argument("trace " + t.id + ": rebooted trace lacks final -1 signal");
  }
}

RewardMap simple_reward(const Trace& t, double delay) {
  for (size_t i = 0; i + 1 < t.steps.size(); ++i)
    if (!(t.steps[i].wall_time < t.steps[i + 1].wall_time))
      throw std::invalid_argument("simple_reward: non-monotone wall times");

  const int n = static_cast<int>(t.steps.size());
  RewardMap rewards;
  for (int i = 0; i < n; ++i) {
    double lo = t.steps[i].wall_time;
    bool last = i + 1 == n;
    double hi = last ? 0.0 : t.steps[i + 1].wall_time;
    int sum = 0;
    bool any = false;
    for (const FeedbackSignal& f : t.feedback) {
      double shifted = f.wall_time - delay;
      if (shifted > lo && (last || shifted <= hi)) {
        sum += f.sign;
        any = true;
      }
    }
    if (any && sum != 0) rewards[i] = sum > 0 ? +1 : -1;
  }
  return rewards;
}

namespace {

bool eligible_source(const RewardMap& rewards, const Trace& t, int k) {
  auto it = rewards.find(k);
  if (it == rewards.end()) return false;
  const TraceStep& s = t.steps[static_cast<size_t>(k)];
  if (s.action == Action::Stop && it->second == -1) return false;
  if (s.invalid_set_after) return false;
  return true;
}

}  // namespace

RewardMap propagate(const RewardMap& rewards, const Trace& t, int window) {
  const int n = static_cast<int>(t.steps.size());
  RewardMap out = rewards;
  for (int i = 0; i < n; ++i) {
    if (out.count(i)) continue;
    for (int k = i + 1; k <= i + window && k < n; ++k) {
      if (!rewards.count(k)) continue;  // only directly rewarded steps are sources
      if (!eligible_source(rewards, t, k)) continue;
      out[i] = rewards.at(k);
      break;
    }
  }
  return out;
}

RewardMap apply_scenario_filters(const RewardMap& rewards, const Trace& t) {
  RewardMap out = rewards;

  // (a) truncate after the first negatively rewarded card interaction
  int cutoff = -1;
  for (const auto& [i, r] : rewards) {
    if (r == -1 && t.steps[static_cast<size_t>(i)].toggle.has_value()) {
      cutoff = i;
      break;
    }
  }
  if (cutoff >= 0) std::erase_if(out, [&](const auto& kv) { return kv.first > cutoff; });

  // (b) drop steps whose toggle made the selected cards unmatchable
  std::erase_if(out, [&](const auto& kv) {
    return t.steps[static_cast<size_t>(kv.first)].invalid_set_after;
  });
  return out;
}

RewardMode reward_mode_from_name(const std::string& name) {
  if (name == "simple") return RewardMode::Simple;
  if (name == "propagated") return RewardMode::Propagated;
  if (name == "no_negative") return RewardMode::NoNegative;
  throw std::invalid_argument("unknown reward mode: " + name);
}

const char* reward_mode_name(RewardMode mode) {
  switch (mode) {
    case RewardMode::Simple: return "simple";
    case RewardMode::Propagated: return "propagated";
    case RewardMode::NoNegative: return "no_negative";
  }
  return "?";
}

std::vector<RewardedExample> build_dataset(const std::vector<Trace>& traces,
                                           RewardMode mode, const RewardConfig& config) {
  std::vector<RewardedExample> out;
  for (const Trace& trace : traces) {
    const Trace* source = &trace;
    Trace stripped;
    if (mode == RewardMode::NoNegative) {
      stripped = trace;
      std::erase_if(stripped.feedback, [](const FeedbackSignal& f) { return f.sign < 0; });
      source = &stripped;
    }

    RewardMap rewards = simple_reward(*source, config.response_delay);
    if (mode != RewardMode::Simple) {
      rewards = propagate(rewards, *source, config.propagation_window);
      rewards = apply_scenario_filters(rewards, *source);
    }

    for (const auto& [i, r] : rewards) {
      const TraceStep& s = trace.steps[static_cast<size_t>(i)];
      RewardedExample ex;
      ex.trace_id = trace.id;
      ex.step = i;
      ex.instruction = trace.instruction;
      ex.observation = s.observation;
      ex.action = s.action;
      ex.reward = r;
      ex.behavior_prob = s.behavior_prob;
      ex.round = trace.round;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

std::vector<RewardedExample> convert_demonstrations(const std::vector<Trace>& demos) {
  std::vector<RewardedExample> out;
  for (const Trace& demo : demos) {
    for (size_t i = 0; i < demo.steps.size(); ++i) {
      const TraceStep& s = demo.steps[i];
      RewardedExample ex;
      ex.trace_id = demo.id;
      ex.step = static_cast<int>(i);
      ex.instruction = demo.instruction;
      ex.observation = s.observation;
      ex.action = s.action;
      ex.reward = +1;
      ex.behavior_prob = 1.0;
      ex.round = 0;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

}  // namespace hexbandit
