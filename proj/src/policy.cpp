#include "hexbandit/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace hexbandit {

ActionMask mask_from_actions(const std::vector<Action>& actions) {
  ActionMask mask{};
  for (Action a : actions) mask[static_cast<size_t>(a)] = true;
  return mask;
}

double FeatureVector::dot(const Eigen::VectorXd& w) const {
  double s = 0.0;
  for (const auto& [i, v] : entries) s += w[static_cast<Eigen::Index>(i)] * v;
  return s;
}

namespace {

int distance_bucket(int d) {
  if (d <= 4) return d;
  if (d <= 6) return 5;
  if (d <= 9) return 7;
  return 9;
}

// 2 = matches every property some descriptor specifies, 1 = matches at least
// one specified property, 0 = mentioned nowhere.
int match_level(const Card& card, const std::vector<CardDescriptor>& descriptors) {
  int level = 0;
  for (const CardDescriptor& d : descriptors) {
    if (matches_descriptor(card, d)) return 2;
    if ((d.shape >= 0 && d.shape == card.shape) || (d.color >= 0 && d.color == card.color) ||
        (d.count >= 0 && d.count == card.count))
      level = 1;
  }
  return level;
}

}  // namespace

FeatureVector featurize(const std::vector<std::string>& instruction, const Observation& o,
                        Action a, uint32_t feature_dim) {
  FeatureVector fv;
  std::string key;
  key.reserve(64);
  const std::string suffix = std::string("|") + action_name(a);
  auto emit = [&](const std::string& k) {
    fv.add(static_cast<uint32_t>(fnv1a64(k + suffix) % feature_dim), 1.0);
  };

  emit("b");
  for (const std::string& tok : instruction) emit("u:" + tok);
  for (size_t i = 0; i + 1 < instruction.size(); ++i)
    emit("g:" + instruction[i] + "_" + instruction[i + 1]);

  const std::vector<CardDescriptor> descriptors = parse_descriptors(instruction);
  int unselected_matches = 0;
  int selected_matches = 0;
  const KnownCard* underfoot = nullptr;
  for (const KnownCard& k : o.cards) {
    const Card& card = k.card;
    if (card.position == o.follower.position) underfoot = &k;
    AxialCoord rel = to_agent_frame(card.position, o.follower);
    int sector = direction_sector(rel);
    int db = distance_bucket(hex_distance(card.position, o.follower.position));
    std::string pos_tag = (sector < 0 ? "c" : std::to_string(sector)) + ":" +
                          std::to_string(db) + ":" + (card.selected ? "1" : "0");
    emit("c:" + pos_tag);
    int level = match_level(card, descriptors);
    if (level == 2) {
      emit("t:" + pos_tag);
      if (card.selected)
        ++selected_matches;
      else
        ++unselected_matches;
    } else if (level == 1) {
      emit("p:" + pos_tag);
    }
  }

  auto count_bucket = [](int n) { return n >= 2 ? 2 : n; };
  emit("ku:" + std::to_string(count_bucket(unselected_matches)));
  emit("ks:" + std::to_string(count_bucket(selected_matches)));

  if (underfoot) {
    int level = match_level(underfoot->card, descriptors);
    emit("f:" + std::string(underfoot->card.selected ? "1" : "0") + ":" +
         std::to_string(level));
    if (level == 2 && underfoot->card.selected && unselected_matches == 0) emit("fin");
  }
  return fv;
}

ActionDistribution distribution_from_features(
    const PolicyParams& p, const std::array<FeatureVector, kNumActions>& features,
    const ActionMask& mask) {
  bool any = false;
  for (bool m : mask) any = any || m;
  if (!any) throw std::invalid_argument("action_distribution: empty mask");

  std::array<double, kNumActions> scores{};
  double max_score = -std::numeric_limits<double>::infinity();
  for (size_t a = 0; a < kNumActions; ++a) {
    if (!mask[a]) continue;
    scores[a] = features[a].dot(p.weights);
    max_score = std::max(max_score, scores[a]);
  }
  ActionDistribution probs{};
  double z = 0.0;
  for (size_t a = 0; a < kNumActions; ++a) {
    if (!mask[a]) continue;
    probs[a] = std::exp(scores[a] - max_score);
    z += probs[a];
  }
  for (size_t a = 0; a < kNumActions; ++a) probs[a] = mask[a] ? probs[a] / z : 0.0;
  return probs;
}

namespace {

std::array<FeatureVector, kNumActions> featurize_all(
    const std::vector<std::string>& instruction, const Observation& o, uint32_t dim) {
  std::array<FeatureVector, kNumActions> out;
  for (size_t a = 0; a < kNumActions; ++a)
    out[a] = featurize(instruction, o, static_cast<Action>(a), dim);
  return out;
}

}  // namespace

ActionDistribution action_distribution(const PolicyParams& p,
                                       const std::vector<std::string>& instruction,
                                       const Observation& o, const ActionMask& mask) {
  return distribution_from_features(
      p, featurize_all(instruction, o, static_cast<uint32_t>(p.dim())), mask);
}

FeatureVector logprob_grad_from_features(const PolicyParams& p,
                                         const std::array<FeatureVector, kNumActions>& features,
                                         Action a, const ActionMask& mask) {
  size_t ai = static_cast<size_t>(a);
  if (!mask[ai]) throw std::invalid_argument("logprob_grad: action is masked out");
  ActionDistribution probs = distribution_from_features(p, features, mask);
  FeatureVector grad = features[ai];
  for (size_t b = 0; b < kNumActions; ++b) {
    if (!mask[b] || probs[b] == 0.0) continue;
    for (const auto& [idx, val] : features[b].entries) grad.add(idx, -probs[b] * val);
  }
  return grad;
}

FeatureVector logprob_grad(const PolicyParams& p, const std::vector<std::string>& instruction,
                           const Observation& o, Action a, const ActionMask& mask) {
  return logprob_grad_from_features(
      p, featurize_all(instruction, o, static_cast<uint32_t>(p.dim())), a, mask);
}

Action member_argmax(const PolicyParams& p, const std::vector<std::string>& instruction,
                     const Observation& o, const ActionMask& mask) {
  auto features = featurize_all(instruction, o, static_cast<uint32_t>(p.dim()));
  double best = -std::numeric_limits<double>::infinity();
  int best_a = -1;
  for (size_t a = 0; a < kNumActions; ++a) {
    if (!mask[a]) continue;
    double s = features[a].dot(p.weights);
    if (s > best) {
      best = s;
      best_a = static_cast<int>(a);
    }
  }
  if (best_a < 0) throw std::invalid_argument("member_argmax: empty mask");
  return static_cast<Action>(best_a);
}

ActionDistribution ensemble_distribution(const Ensemble& e,
                                         const std::vector<std::string>& instruction,
                                         const Observation& o, const ActionMask& mask) {
  if (e.members.empty()) throw std::invalid_argument("ensemble_distribution: no members");
  std::array<int, kNumActions> votes{};
  for (const PolicyParams& member : e.members)
    votes[static_cast<size_t>(member_argmax(member, instruction, o, mask))] += 1;

  ActionDistribution probs{};
  double z = 0.0;
  for (size_t a = 0; a < kNumActions; ++a) {
    if (!mask[a]) continue;
    probs[a] = std::exp(static_cast<double>(votes[a]));
    z += probs[a];
  }
  for (size_t a = 0; a < kNumActions; ++a) probs[a] = mask[a] ? probs[a] / z : 0.0;
  return probs;
}

DistributionSource ensemble_source(const Ensemble& e) {
  return [&e](const std::vector<std::string>& instruction, const Observation& o,
              const ActionMask& mask) { return ensemble_distribution(e, instruction, o, mask); };
}

DistributionSource greedy_source(const PolicyParams& p) {
  return [&p](const std::vector<std::string>& instruction, const Observation& o,
              const ActionMask& mask) {
    ActionDistribution probs{};
    probs[static_cast<size_t>(member_argmax(p, instruction, o, mask))] = 1.0;
    return probs;
  };
}

namespace {

Action sample_action(const ActionDistribution& probs, Rng& rng) {
  double r = rng.next_double();
  double cum = 0.0;
  int last_positive = -1;
  for (size_t a = 0; a < kNumActions; ++a) {
    if (probs[a] <= 0.0) continue;
    last_positive = static_cast<int>(a);
    cum += probs[a];
    if (r < cum) return static_cast<Action>(a);
  }
  if (last_positive < 0) throw std::runtime_error("sample_action: empty distribution");
  return static_cast<Action>(last_positive);
}

}  // namespace

Trace sample_rollout(const DistributionSource& source, const Scenario& scenario,
                     LeaderOracle& oracle, Rng& rng, int max_steps,
                     const std::string& trace_id, int round) {
  if (max_steps < 1) throw std::invalid_argument("sample_rollout: max_steps must be >= 1");
  Trace trace;
  trace.id = trace_id;
  trace.scenario_seed = scenario.seed;
  trace.round = round;
  trace.instruction = scenario.instruction;

  WorldState state = scenario.state;
  Observation obs = initial_observation(state);
  for (int i = 0; i < max_steps; ++i) {
    ActionMask mask = mask_from_actions(executable_actions(state));
    ActionDistribution probs = source(trace.instruction, obs, mask);
    Action a = sample_action(probs, rng);
    double t_start = state.clock;

    StepResult res = apply_action(state, a);
    trace.steps.push_back({obs, a, t_start, probs[static_cast<size_t>(a)], res.toggle,
                           res.invalid_set_after});
    if (auto fb = oracle.emit_feedback(state, a, res, t_start)) trace.feedback.push_back(*fb);

    if (a == Action::Stop) {
      state = res.state;
      break;
    }
    if (oracle.maybe_reboot(res)) {
      trace.rebooted = true;
      trace.feedback.push_back({-1, res.state.clock});
      state = res.state;
      break;
    }
    state = res.state;
    obs = observe(state, obs);
  }
  trace.final_pose = state.follower;
  return trace;
}

Trace demonstration_trace(const Scenario& scenario, const std::string& trace_id) {
  Trace trace;
  trace.id = trace_id;
  trace.scenario_seed = scenario.seed;
  trace.round = 0;
  trace.instruction = scenario.instruction;

  WorldState state = scenario.state;
  Observation obs = initial_observation(state);
  for (Action a : scenario.plan.optimal_actions) {
    double t_start = state.clock;
    StepResult res = apply_action(state, a);
    trace.steps.push_back({obs, a, t_start, 1.0, res.toggle, res.invalid_set_after});
    state = res.state;
    obs = observe(state, obs);
  }
  trace.final_pose = state.follower;
  return trace;
}

RolloutOutcome greedy_outcome(const PolicyParams& p, const Scenario& scenario, int max_steps) {
  RolloutOutcome out;
  WorldState state = scenario.state;
  Observation obs = initial_observation(state);
  for (int i = 0; i < max_steps; ++i) {
    ActionMask mask = mask_from_actions(executable_actions(state));
    Action a = member_argmax(p, scenario.instruction, obs, mask);
    StepResult res = apply_action(state, a);
    out.steps += 1;
    if (res.toggle) out.toggles.push_back(*res.toggle);
    state = res.state;
    if (a == Action::Stop) {
      out.completed = true;
      break;
    }
    obs = observe(state, obs);
  }
  out.stop_position = state.follower.position;
  return out;
}

void save_checkpoint(const std::string& path, const PolicyParams& params, uint64_t seed,
                     int round) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  const char magic[4] = {'H', 'X', 'B', '1'};
  f.write(magic, 4);
  uint32_t dim = static_cast<uint32_t>(params.dim());
  int32_t round32 = round;
  f.write(reinterpret_cast<const char*>(&dim), sizeof dim);
  f.write(reinterpret_cast<const char*>(&seed), sizeof seed);
  f.write(reinterpret_cast<const char*>(&round32), sizeof round32);
  f.write(reinterpret_cast<const char*>(params.weights.data()),
          static_cast<std::streamsize>(sizeof(double) * params.dim()));
  if (!f) throw std::runtime_error("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read checkpoint: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::string(magic, 4) != "HXB1")
    throw std::runtime_error("bad checkpoint magic in " + path);
  uint32_t dim = 0;
  uint64_t seed = 0;
  int32_t round = 0;
  f.read(reinterpret_cast<char*>(&dim), sizeof dim);
  f.read(reinterpret_cast<char*>(&seed), sizeof seed);
  f.read(reinterpret_cast<char*>(&round), sizeof round);
  Checkpoint ckpt;
  ckpt.params = PolicyParams(static_cast<Eigen::Index>(dim));
  f.read(reinterpret_cast<char*>(ckpt.params.weights.data()),
         static_cast<std::streamsize>(sizeof(double) * dim));
  if (!f) throw std::runtime_error("truncated checkpoint: " + path);
  ckpt.seed = seed;
  ckpt.round = round;
  return ckpt;
}

}  // namespace hexbandit
