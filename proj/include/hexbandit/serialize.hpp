#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hexbandit/rewards.hpp"
#include "hexbandit/simleader.hpp"
#include "hexbandit/trainer.hpp"

// Run configuration (flat key/value JSON document) and the on-disk formats:
// traces and datasets as JSONL, metrics as CSV.

namespace hexbandit {

enum class Variant { RewardProp, SimpleReward, NoNegative, FewerDemo, SupOnly };

Variant variant_from_name(const std::string& name);
const char* variant_name(Variant v);
RewardMode variant_reward_mode(Variant v);

struct Config {
  std::string run_name = "run";
  std::string variant = "RewardProp";
  uint64_t seed = 1;
  int rounds = 5;
  int interactions_per_round = 200;
  int demo_scenarios = 150;
  double fewer_demo_fraction = 0.25;

  int grid_edge = 25;
  int obstacle_count = 40;
  int card_count = 21;
  int max_targets = 2;
  double preselect_prob = 0.5;
  int max_plan_actions = 20;
  int visibility_radius = 6;
  double action_duration = 0.5;
  int max_steps = 30;

  double feedback_prob = 0.65;
  double sign_error_rate = 0.07;
  double delay_min = 0.3;
  double delay_max = 1.0;
  int reboot_deviation = 3;

  double response_delay = 0.2;
  int propagation_window = 8;

  int feature_dim = 65536;
  int ensemble_size = 10;
  int batch_size = 16;
  double learning_rate = 0.001;
  double clip_ceiling = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int max_epochs = 50;
  int patience = 5;
  double validation_fraction = 0.05;
  double init_scale = 0.01;

  int stop_tolerance = 0;

  ScenarioConfig scenario_config() const;
  OracleConfig oracle_config() const;
  RewardConfig reward_config() const;
  TrainConfig train_config() const;
  Variant variant_enum() const { return variant_from_name(variant); }
};

// Flat JSON object; unknown keys are rejected.
Config load_config(const std::string& path);
void save_config(const std::string& path, const Config& config);
Config config_from_json_text(const std::string& text);
std::string config_to_json_text(const Config& config);

// --- traces ---
std::string trace_to_json(const Trace& t);
// Observations need the static context (obstacles) back; it is taken from
// `scenario`, which must be the regenerated scenario for t.scenario_seed.
Trace trace_from_json(const std::string& line, const Scenario& scenario);

void save_traces(const std::string& path, const std::vector<Trace>& traces);
std::vector<Trace> load_traces(const std::string& path, const ScenarioConfig& config);

// --- datasets ---
std::string observation_digest(const Observation& o);
std::string example_to_json(const RewardedExample& ex);
void save_dataset(const std::string& path, const std::vector<RewardedExample>& examples);

// Dataset rows carry an observation digest, not the observation; loading
// joins rows back to their traces by (trace_id, step) and verifies digests.
std::vector<RewardedExample> load_dataset(const std::string& path,
                                          const std::vector<Trace>& traces);

// --- metrics ---
struct MetricRow {
  int round = 0;
  std::string variant;
  std::string metric;
  double value = 0.0;
};

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows);
std::vector<MetricRow> read_metrics_csv(const std::string& path);

}  // namespace hexbandit
