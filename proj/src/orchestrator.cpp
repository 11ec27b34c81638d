#include "hexbandit/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "hexbandit/policy.hpp"

namespace hexbandit {

namespace fs = std::filesystem;

std::string run_dir(const std::string& out_dir, const Config& config) {
  return (fs::path(out_dir) / config.run_name).string();
}

std::string round_dir(const std::string& run, int round) {
  return (fs::path(run) / ("round_" + std::to_string(round))).string();
}

void save_ensemble(const std::string& dir, const Ensemble& ensemble, uint64_t seed,
                   int round) {
  for (size_t i = 0; i < ensemble.members.size(); ++i) {
    fs::path p = fs::path(dir) / ("member_" + std::to_string(i) + ".ckpt");
    save_checkpoint(p.string(), ensemble.members[i], seed, round);
  }
}

Ensemble load_ensemble(const std::string& dir, int ensemble_size) {
  Ensemble e;
  for (int i = 0; i < ensemble_size; ++i) {
    fs::path p = fs::path(dir) / ("member_" + std::to_string(i) + ".ckpt");
    e.members.push_back(load_checkpoint(p.string()).params);
  }
  return e;
}

std::vector<Scenario> demo_scenarios(int round, int count, const Config& config) {
  std::vector<Scenario> out;
  out.reserve(static_cast<size_t>(count));
  const ScenarioConfig sc = config.scenario_config();
  const char* stream = round == 0 ? "demo" : "supdemo";
  for (int i = 0; i < count; ++i)
    out.push_back(generate_scenario(
        stream_seed(config.seed, stream, static_cast<uint64_t>(round), static_cast<uint64_t>(i)),
        sc));
  return out;
}

BootstrapResult bootstrap(const Config& config) {
  BootstrapResult result;
  int count = config.demo_scenarios;
  if (config.variant_enum() == Variant::FewerDemo)
    count = std::max(1, static_cast<int>(std::lround(count * config.fewer_demo_fraction)));

  std::vector<Scenario> scenarios = demo_scenarios(0, count, config);
  int n_val = std::max(1, static_cast<int>(std::lround(static_cast<double>(count) *
                                                       config.validation_fraction)));
  n_val = std::min(n_val, count - 1);
  // Last slice is the held-out validation split, fixed across all rounds.
  result.validation.assign(scenarios.end() - n_val, scenarios.end());
  scenarios.resize(scenarios.size() - static_cast<size_t>(n_val));

  for (size_t i = 0; i < scenarios.size(); ++i)
    result.demo_traces.push_back(
        demonstration_trace(scenarios[i], "d0_i" + std::to_string(i)));
  result.dataset = convert_demonstrations(result.demo_traces);
  result.ensemble = train_ensemble(result.dataset, result.validation, config.train_config(),
                                   stream_seed(config.seed, "train", 0), &result.train_log);
  return result;
}

std::vector<Trace> deploy_round(int round, const Ensemble& ensemble, const Config& config) {
  std::vector<Trace> traces;
  const ScenarioConfig sc = config.scenario_config();
  const OracleConfig oc = config.oracle_config();
  DistributionSource source = ensemble_source(ensemble);
  for (int i = 0; i < config.interactions_per_round; ++i) {
    uint64_t r = static_cast<uint64_t>(round), k = static_cast<uint64_t>(i);
    Scenario scenario = generate_scenario(stream_seed(config.seed, "scenario", r, k), sc);
    LeaderOracle oracle(scenario.plan, oc, stream_seed(config.seed, "oracle", r, k));
    Rng sampler(stream_seed(config.seed, "sampling", r, k));
    std::string id = "r" + std::to_string(round) + "_i" + std::to_string(i);
    traces.push_back(
        sample_rollout(source, scenario, oracle, sampler, config.max_steps, id, round));
  }
  return traces;
}

std::vector<MetricRow> round_metrics(int round, const std::vector<Trace>& traces,
                                     const Config& config) {
  const std::string variant = config.variant;
  std::vector<MetricRow> rows;
  const ScenarioConfig sc = config.scenario_config();
  const RewardConfig rc = config.reward_config();

  int completed = 0, rebooted = 0;
  int judged_correct = 0;
  std::vector<bool> judged;
  double swsd_sum = 0.0;
  long total_steps = 0, simple_steps = 0, propagated_steps = 0;
  for (const Trace& t : traces) {
    Scenario scenario = generate_scenario(t.scenario_seed, sc);
    if (t.completed()) {
      completed += 1;
      bool ok = ground_truth_judge(t, scenario.plan, config.stop_tolerance);
      judged.push_back(ok);
      if (ok) judged_correct += 1;
    }
    if (t.rebooted) rebooted += 1;
    swsd_sum += swsd(outcome_from_trace(t), reference_outcome(scenario.plan));

    total_steps += static_cast<long>(t.steps.size());
    RewardMap simple = simple_reward(t, rc.response_delay);
    simple_steps += static_cast<long>(simple.size());
    RewardMap prop = apply_scenario_filters(propagate(simple, t, rc.propagation_window), t);
    propagated_steps += static_cast<long>(prop.size());
  }

  const double n = static_cast<double>(traces.size());
  FeedbackStats fb = feedback_stats(traces);
  rows.push_back({round, variant, "ground_truth_accuracy", judged_correct / n});
  rows.push_back({round, variant, "adjusted_correctness",
                  adjusted_correctness(static_cast<int>(traces.size()), completed, judged)});
  rows.push_back({round, variant, "mean_swsd", swsd_sum / n});
  rows.push_back({round, variant, "completion_rate", completed / n});
  rows.push_back({round, variant, "reboot_rate", rebooted / n});
  rows.push_back({round, variant, "positive_rate", fb.positive_rate});
  rows.push_back({round, variant, "negative_rate", fb.negative_rate});
  rows.push_back({round, variant, "pos_neg_ratio",
                  fb.pos_neg_ratio ? *fb.pos_neg_ratio : 0.0});
  rows.push_back({round, variant, "simple_coverage",
                  total_steps > 0 ? static_cast<double>(simple_steps) / total_steps : 0.0});
  rows.push_back({round, variant, "propagated_coverage",
                  total_steps > 0 ? static_cast<double>(propagated_steps) / total_steps : 0.0});
  return rows;
}

RoundResult run_round(int round, const Ensemble& ensemble,
                      const std::vector<RewardedExample>& accumulated,
                      const std::vector<Scenario>& validation, const Config& config) {
  RoundResult result;
  result.traces = deploy_round(round, ensemble, config);

  if (config.variant_enum() == Variant::SupOnly) {
    // Same interaction budget, but spent on fresh demonstrations.
    std::vector<Scenario> scenarios =
        demo_scenarios(round, config.interactions_per_round, config);
    std::vector<Trace> demos;
    for (size_t i = 0; i < scenarios.size(); ++i)
      demos.push_back(demonstration_trace(
          scenarios[i], "sup" + std::to_string(round) + "_i" + std::to_string(i)));
    result.dataset = convert_demonstrations(demos);
  } else {
    result.dataset = build_dataset(result.traces, variant_reward_mode(config.variant_enum()),
                                   config.reward_config());
  }

  std::vector<RewardedExample> all = accumulated;
  all.insert(all.end(), result.dataset.begin(), result.dataset.end());
  result.next_ensemble = train_ensemble(all, validation, config.train_config(),
                                        stream_seed(config.seed, "train", static_cast<uint64_t>(round)),
                                        &result.train_log);

  result.metrics = round_metrics(round, result.traces, config);
  result.metrics.push_back({round, config.variant, "dataset_size",
                            static_cast<double>(result.dataset.size())});
  result.metrics.push_back(
      {round, config.variant, "cumulative_examples", static_cast<double>(all.size())});
  return result;
}

namespace {

void write_round_artifacts(const std::string& dir, const std::vector<Trace>& traces,
                           const std::vector<RewardedExample>& dataset,
                           const Ensemble& ensemble, uint64_t seed, int round,
                           const std::vector<EpochRecord>& train_log,
                           const std::vector<MetricRow>& metrics) {
  fs::create_directories(dir);
  save_traces((fs::path(dir) / "traces.jsonl").string(), traces);
  save_dataset((fs::path(dir) / "dataset.jsonl").string(), dataset);
  save_ensemble(dir, ensemble, seed, round);
  std::ofstream log(fs::path(dir) / "training_log.csv");
  write_epoch_log(log, train_log);
  std::ofstream mcsv(fs::path(dir) / "metrics.csv");
  write_metrics_csv(mcsv, metrics);
}

}  // namespace

std::vector<MetricRow> run_experiment(const Config& config, const std::string& out_dir) {
  const std::string run = run_dir(out_dir, config);
  fs::create_directories(run);
  save_config((fs::path(run) / "config.json").string(), config);

  BootstrapResult boot = bootstrap(config);
  std::vector<MetricRow> all_metrics;
  all_metrics.push_back({0, config.variant, "dataset_size",
                         static_cast<double>(boot.dataset.size())});
  all_metrics.push_back({0, config.variant, "validation_scenarios",
                         static_cast<double>(boot.validation.size())});
  write_round_artifacts(round_dir(run, 0), boot.demo_traces, boot.dataset, boot.ensemble,
                        config.seed, 0, boot.train_log, all_metrics);
  std::cerr << "[round 0] demos=" << boot.demo_traces.size()
            << " examples=" << boot.dataset.size() << "\n";

  Ensemble ensemble = std::move(boot.ensemble);
  std::vector<RewardedExample> accumulated = std::move(boot.dataset);

  for (int round = 1; round <= config.rounds; ++round) {
    RoundResult rr = run_round(round, ensemble, accumulated, boot.validation, config);
    write_round_artifacts(round_dir(run, round), rr.traces, rr.dataset, rr.next_ensemble,
                          config.seed, round, rr.train_log, rr.metrics);
    all_metrics.insert(all_metrics.end(), rr.metrics.begin(), rr.metrics.end());
    accumulated.insert(accumulated.end(), rr.dataset.begin(), rr.dataset.end());
    ensemble = std::move(rr.next_ensemble);
    for (const MetricRow& m : rr.metrics)
      if (m.metric == "ground_truth_accuracy")
        std::cerr << "[round " << round << "] accuracy=" << m.value << "\n";
  }

  std::ofstream mcsv(fs::path(run) / "metrics.csv");
  write_metrics_csv(mcsv, all_metrics);
  return all_metrics;
}

}  // namespace hexbandit
