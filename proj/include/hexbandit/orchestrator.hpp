#pragma once

#include <string>
#include <vector>

#include "hexbandit/eval.hpp"
#include "hexbandit/serialize.hpp"
#include "hexbandit/trainer.hpp"

// Round loop: deploy the current ensemble, build the round's dataset per
// variant, retrain from scratch on everything collected so far, persist all
// artifacts. Fully deterministic per (seed, config).

namespace hexbandit {

struct BootstrapResult {
  std::vector<Trace> demo_traces;        // training split
  std::vector<Scenario> validation;      // held-out split, fixed for all rounds
  std::vector<RewardedExample> dataset;  // D_0
  Ensemble ensemble;                     // theta_1
  std::vector<EpochRecord> train_log;
};

// Generates the demonstration set (FewerDemo uses the configured fraction),
// holds out the validation split, converts optimal replays to D_0 and trains
// theta_1.
BootstrapResult bootstrap(const Config& config);

struct RoundResult {
  std::vector<Trace> traces;             // deployment traces of this round
  std::vector<RewardedExample> dataset;  // D_rho
  Ensemble next_ensemble;
  std::vector<MetricRow> metrics;
  std::vector<EpochRecord> train_log;
};

// Deploys `ensemble` on fresh scenarios, builds D_rho per the variant
// (SupOnly substitutes fresh demonstrations), retrains from scratch on the
// union of `accumulated` and D_rho, and computes the round's metrics.
RoundResult run_round(int round, const Ensemble& ensemble,
                      const std::vector<RewardedExample>& accumulated,
                      const std::vector<Scenario>& validation, const Config& config);

// Metric rows for a set of deployment traces (judge, SWSD, reboot and
// feedback rates, reward coverage).
std::vector<MetricRow> round_metrics(int round, const std::vector<Trace>& traces,
                                     const Config& config);

// Deployment of one round: scenario, oracle and sampling streams are derived
// from (seed, name, round, index), independent of the variant.
std::vector<Trace> deploy_round(int round, const Ensemble& ensemble, const Config& config);

// Demonstration scenarios/traces for bootstrap (round 0) and SupOnly rounds.
std::vector<Scenario> demo_scenarios(int round, int count, const Config& config);

// Runs bootstrap plus rounds 1..config.rounds, persisting every trace,
// dataset, checkpoint and metric row under <out_dir>/<run_name>/. Returns all
// metric rows.
std::vector<MetricRow> run_experiment(const Config& config, const std::string& out_dir);

// Paths inside a run directory.
std::string run_dir(const std::string& out_dir, const Config& config);
std::string round_dir(const std::string& run, int round);

// Ensemble checkpoint I/O over member_<i>.ckpt files.
void save_ensemble(const std::string& dir, const Ensemble& ensemble, uint64_t seed, int round);
Ensemble load_ensemble(const std::string& dir, int ensemble_size);

}  // namespace hexbandit
