#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <vector>

#include "hexbandit/policy.hpp"
#include "hexbandit/rewards.hpp"

// Contextual-bandit optimization: clipped-IPS policy-gradient ascent with
// Adam, from-scratch per-round retraining, early stopping on validation SWSD.

namespace hexbandit {

struct TrainConfig {
  double learning_rate = 0.001;
  int batch_size = 16;      // agent steps per batch
  double clip_ceiling = 1.0;
  int max_epochs = 50;
  int patience = 5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double validation_fraction = 0.05;
  uint32_t feature_dim = 1u << 16;
  double init_scale = 0.01;  // uniform(-s, s) from-scratch initialization
  int ensemble_size = 10;
  int validation_max_steps = 30;
};

// Clipped inverse propensity scoring coefficient: 1 for demonstration data
// (round 0), min(ceiling, current/behavior) otherwise. Throws when the
// behavior probability is not positive.
double ips_coefficient(const RewardedExample& ex, double current_prob,
                       double clip_ceiling = 1.0);

// c * r * grad log pi(a); the mask is derived from the example's observation.
FeatureVector example_gradient(const RewardedExample& ex, const PolicyParams& params,
                               double clip_ceiling = 1.0);

struct AdamState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  long timestep = 0;

  explicit AdamState(Eigen::Index dim = 0)
      : first_moment(Eigen::VectorXd::Zero(dim)), second_moment(Eigen::VectorXd::Zero(dim)) {}
};

// Bias-corrected Adam ascent step: params += lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(AdamState& state, PolicyParams& params, const Eigen::VectorXd& mean_gradient,
               const TrainConfig& config);

// Per-epoch training log row.
struct EpochRecord {
  int member = 0;
  int epoch = 0;
  double objective = 0.0;   // mean c * r * log pi(a) over the epoch
  double val_swsd = 0.0;
  bool selected = false;
};

// Trains a single member from scratch on `examples`, shuffling with `seed`,
// evaluating mean SWSD on the validation scenarios after each epoch, and
// returning the best parameters seen. Stops after `patience` non-improving
// epochs. Deterministic in (examples, seed, config).
PolicyParams train_member(const std::vector<RewardedExample>& examples,
                          const std::vector<Scenario>& validation, const TrainConfig& config,
                          uint64_t seed, std::vector<EpochRecord>* log = nullptr,
                          int member_index = 0);

// Trains ensemble members independently on the same examples with seeds
// derived from (seed, member index).
Ensemble train_ensemble(const std::vector<RewardedExample>& examples,
                        const std::vector<Scenario>& validation, const TrainConfig& config,
                        uint64_t seed, std::vector<EpochRecord>* log = nullptr);

void write_epoch_log(std::ostream& out, const std::vector<EpochRecord>& log);

}  // namespace hexbandit
