#include "hexbandit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "hexbandit/eval.hpp"

namespace hexbandit {

double ips_coefficient(const RewardedExample& ex, double current_prob, double clip_ceiling) {
  if (ex.round == 0) return 1.0;
  if (!(ex.behavior_prob > 0.0))
    throw std::invalid_argument("ips_coefficient: behavior probability must be positive");
  return std::min(clip_ceiling, current_prob / ex.behavior_prob);
}

FeatureVector example_gradient(const RewardedExample& ex, const PolicyParams& params,
                               double clip_ceiling) {
  ActionMask mask = mask_from_actions(executable_actions(ex.observation));
  ActionDistribution probs = action_distribution(params, ex.instruction, ex.observation, mask);
  double c = ips_coefficient(ex, probs[static_cast<size_t>(ex.action)], clip_ceiling);
  FeatureVector grad = logprob_grad(params, ex.instruction, ex.observation, ex.action, mask);
  double scale = c * static_cast<double>(ex.reward);
  for (auto& [idx, val] : grad.entries) val *= scale;
  return grad;
}

void adam_step(AdamState& state, PolicyParams& params, const Eigen::VectorXd& mean_gradient,
               const TrainConfig& config) {
  if (mean_gradient.size() != params.dim())
    throw std::invalid_argument("adam_step: gradient/parameter shape mismatch");
  if (state.first_moment.size() != params.dim()) {
    state.first_moment = Eigen::VectorXd::Zero(params.dim());
    state.second_moment = Eigen::VectorXd::Zero(params.dim());
  }
  state.timestep += 1;
  const double b1 = config.adam_beta1, b2 = config.adam_beta2;
  state.first_moment = b1 * state.first_moment + (1.0 - b1) * mean_gradient;
  state.second_moment =
      b2 * state.second_moment.array() + (1.0 - b2) * mean_gradient.array().square();
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.timestep));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.timestep));
  params.weights.array() +=
      config.learning_rate * (state.first_moment.array() / corr1) /
      ((state.second_moment.array() / corr2).sqrt() + config.adam_epsilon);
}

namespace {

struct CachedExample {
  std::array<FeatureVector, kNumActions> features;
  ActionMask mask{};
  size_t action = 0;
  double reward = 0.0;
  double behavior_prob = 1.0;
  int round = 0;
};

std::vector<CachedExample> build_cache(const std::vector<RewardedExample>& examples,
                                       uint32_t feature_dim) {
  std::vector<CachedExample> cache;
  cache.reserve(examples.size());
  for (const RewardedExample& ex : examples) {
    CachedExample ce;
    ce.mask = mask_from_actions(executable_actions(ex.observation));
    for (size_t a = 0; a < kNumActions; ++a)
      ce.features[a] =
          featurize(ex.instruction, ex.observation, static_cast<Action>(a), feature_dim);
    ce.action = static_cast<size_t>(ex.action);
    ce.reward = static_cast<double>(ex.reward);
    ce.behavior_prob = ex.behavior_prob;
    ce.round = ex.round;
    cache.push_back(std::move(ce));
  }
  return cache;
}

double validation_swsd(const PolicyParams& params, const std::vector<Scenario>& validation,
                       int max_steps) {
  if (validation.empty()) return 0.0;
  double total = 0.0;
  for (const Scenario& scenario : validation) {
    RolloutOutcome ro = greedy_outcome(params, scenario, max_steps);
    ExecutionOutcome agent;
    std::map<int, int> parity;
    for (const ToggleEvent& t : ro.toggles) parity[t.card_id] += 1;
    for (const auto& [id, count] : parity)
      if (count % 2 == 1) agent.net_selected_ids.push_back(id);
    agent.stop_position = ro.stop_position;
    agent.completed = ro.completed;
    total += swsd(agent, reference_outcome(scenario.plan));
  }
  return total / static_cast<double>(validation.size());
}

}  // namespace

PolicyParams train_member(const std::vector<RewardedExample>& examples,
                          const std::vector<Scenario>& validation, const TrainConfig& config,
                          uint64_t seed, std::vector<EpochRecord>* log, int member_index) {
  if (examples.empty()) throw std::invalid_argument("train_member: no examples");

  std::vector<CachedExample> cache = build_cache(examples, config.feature_dim);
  const Eigen::Index dim = static_cast<Eigen::Index>(config.feature_dim);

  Rng rng(seed);
  PolicyParams params(dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    params.weights[i] = rng.uniform(-config.init_scale, config.init_scale);

  AdamState adam(dim);
  Eigen::VectorXd batch_grad = Eigen::VectorXd::Zero(dim);

  PolicyParams best = params;
  double best_swsd = validation_swsd(params, validation, config.validation_max_steps);
  int epochs_since_improvement = 0;

  std::vector<size_t> order(cache.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(order);
    double objective_sum = 0.0;
    size_t batch_start = 0;
    while (batch_start < order.size()) {
      size_t batch_end = std::min(batch_start + static_cast<size_t>(config.batch_size),
                                  order.size());
      batch_grad.setZero();
      for (size_t k = batch_start; k < batch_end; ++k) {
        const CachedExample& ce = cache[order[k]];
        ActionDistribution probs = distribution_from_features(params, ce.features, ce.mask);
        double current = probs[ce.action];
        double c = ce.round == 0
                       ? 1.0
                       : std::min(config.clip_ceiling, current / ce.behavior_prob);
        double scale = c * ce.reward;
        objective_sum += scale * std::log(current);
        // grad of log pi: phi(a) - sum_b pi(b) phi(b)
        for (const auto& [idx, val] : ce.features[ce.action].entries)
          batch_grad[static_cast<Eigen::Index>(idx)] += scale * val;
        for (size_t b = 0; b < kNumActions; ++b) {
          if (!ce.mask[b] || probs[b] == 0.0) continue;
          double w = scale * probs[b];
          for (const auto& [idx, val] : ce.features[b].entries)
            batch_grad[static_cast<Eigen::Index>(idx)] -= w * val;
        }
      }
      batch_grad /= static_cast<double>(batch_end - batch_start);
      adam_step(adam, params, batch_grad, config);
      batch_start = batch_end;
    }

    double val = validation_swsd(params, validation, config.validation_max_steps);
    bool selected = val > best_swsd;
    if (selected) {
      best_swsd = val;
      best = params;
      epochs_since_improvement = 0;
    } else {
      epochs_since_improvement += 1;
    }
    if (log)
      log->push_back({member_index, epoch, objective_sum / static_cast<double>(cache.size()),
                      val, selected});
    if (epochs_since_improvement >= config.patience) break;
  }
  return best;
}

Ensemble train_ensemble(const std::vector<RewardedExample>& examples,
                        const std::vector<Scenario>& validation, const TrainConfig& config,
                        uint64_t seed, std::vector<EpochRecord>* log) {
  Ensemble ensemble;
  for (int i = 0; i < config.ensemble_size; ++i) {
    uint64_t member_seed = stream_seed(seed, "member", static_cast<uint64_t>(i));
    ensemble.members.push_back(
        train_member(examples, validation, config, member_seed, log, i));
  }
  return ensemble;
}

void write_epoch_log(std::ostream& out, const std::vector<EpochRecord>& log) {
  out << "member,epoch,objective,val_swsd,selected\n";
  char buf[128];
  for (const EpochRecord& r : log) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.6f,%.6f,%d\n", r.member, r.epoch, r.objective,
                  r.val_swsd, r.selected ? 1 : 0);
    out << buf;
  }
}

}  // namespace hexbandit
