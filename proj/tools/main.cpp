// hexbandit CLI: bootstrap / deploy / build-dataset / train / evaluate / run.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hexbandit/orchestrator.hpp"
#include "hexbandit/policy.hpp"

namespace fs = std::filesystem;
using namespace hexbandit;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "runs";
  std::optional<uint64_t> seed;
  std::optional<int> rounds;
  std::optional<std::string> variant;
  std::optional<int> interactions;
  int round = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_round) {
  cmd->add_option("--config", opts.config_path, "flat JSON config file");
  cmd->add_option("--out-dir", opts.out_dir, "directory that holds run folders");
  cmd->add_option("--seed", opts.seed, "root seed override");
  cmd->add_option("--rounds", opts.rounds, "number of rounds override");
  cmd->add_option("--variant", opts.variant,
                  "RewardProp | SimpleReward | NoNegative | FewerDemo | SupOnly");
  cmd->add_option("--interactions", opts.interactions, "interactions per round override");
  if (with_round) cmd->add_option("--round", opts.round, "round index");
}

// Subcommands that operate on an existing run read its persisted config so
// seed streams line up; explicit flags still win.
Config resolve_config(const CommonOpts& opts, bool prefer_run_config) {
  Config config;
  if (!opts.config_path.empty()) {
    config = load_config(opts.config_path);
  } else if (prefer_run_config) {
    fs::path stored = fs::path(opts.out_dir) / config.run_name / "config.json";
    if (fs::exists(stored)) config = load_config(stored.string());
  }
  if (opts.seed) config.seed = *opts.seed;
  if (opts.rounds) config.rounds = *opts.rounds;
  if (opts.variant) config.variant = *opts.variant;
  if (opts.interactions) config.interactions_per_round = *opts.interactions;
  config.variant_enum();  // validate
  return config;
}

std::vector<Trace> load_round_traces(const Config& config, const std::string& run, int round) {
  fs::path p = fs::path(round_dir(run, round)) / "traces.jsonl";
  return load_traces(p.string(), config.scenario_config());
}

int cmd_bootstrap(const CommonOpts& opts) {
  Config config = resolve_config(opts, false);
  const std::string run = run_dir(opts.out_dir, config);
  fs::create_directories(run);
  save_config((fs::path(run) / "config.json").string(), config);

  BootstrapResult boot = bootstrap(config);
  const std::string dir = round_dir(run, 0);
  fs::create_directories(dir);
  save_traces((fs::path(dir) / "traces.jsonl").string(), boot.demo_traces);
  save_dataset((fs::path(dir) / "dataset.jsonl").string(), boot.dataset);
  save_ensemble(dir, boot.ensemble, config.seed, 0);
  std::ofstream log(fs::path(dir) / "training_log.csv");
  write_epoch_log(log, boot.train_log);
  std::cout << "bootstrap: " << boot.demo_traces.size() << " demo traces, "
            << boot.dataset.size() << " examples -> " << dir << "\n";
  return 0;
}

int cmd_deploy(const CommonOpts& opts) {
  Config config = resolve_config(opts, true);
  const std::string run = run_dir(opts.out_dir, config);
  Ensemble ensemble = load_ensemble(round_dir(run, opts.round - 1), config.ensemble_size);
  std::vector<Trace> traces = deploy_round(opts.round, ensemble, config);
  fs::create_directories(round_dir(run, opts.round));
  save_traces((fs::path(round_dir(run, opts.round)) / "traces.jsonl").string(), traces);
  std::cout << "deploy: round " << opts.round << ", " << traces.size() << " traces\n";
  return 0;
}

int cmd_build_dataset(const CommonOpts& opts) {
  Config config = resolve_config(opts, true);
  const std::string run = run_dir(opts.out_dir, config);
  std::vector<RewardedExample> dataset;
  if (config.variant_enum() == Variant::SupOnly) {
    std::vector<Scenario> scenarios =
        demo_scenarios(opts.round, config.interactions_per_round, config);
    std::vector<Trace> demos;
    for (size_t i = 0; i < scenarios.size(); ++i)
      demos.push_back(demonstration_trace(
          scenarios[i], "sup" + std::to_string(opts.round) + "_i" + std::to_string(i)));
    dataset = convert_demonstrations(demos);
  } else {
    std::vector<Trace> traces = load_round_traces(config, run, opts.round);
    dataset = build_dataset(traces, variant_reward_mode(config.variant_enum()),
                            config.reward_config());
  }
  fs::path p = fs::path(round_dir(run, opts.round)) / "dataset.jsonl";
  save_dataset(p.string(), dataset);
  std::cout << "build-dataset: round " << opts.round << ", " << dataset.size()
            << " examples -> " << p.string() << "\n";
  return 0;
}

int cmd_train(const CommonOpts& opts) {
  Config config = resolve_config(opts, true);
  const std::string run = run_dir(opts.out_dir, config);

  // Rebuild the validation split exactly as bootstrap did.
  int count = config.demo_scenarios;
  if (config.variant_enum() == Variant::FewerDemo)
    count = std::max(1, static_cast<int>(std::lround(count * config.fewer_demo_fraction)));
  std::vector<Scenario> scenarios = demo_scenarios(0, count, config);
  int n_val = std::max(1, static_cast<int>(std::lround(count * config.validation_fraction)));
  n_val = std::min(n_val, count - 1);
  std::vector<Scenario> validation(scenarios.end() - n_val, scenarios.end());

  std::vector<RewardedExample> all;
  for (int r = 0; r <= opts.round; ++r) {
    std::vector<Trace> traces = load_round_traces(config, run, r);
    fs::path p = fs::path(round_dir(run, r)) / "dataset.jsonl";
    std::vector<RewardedExample> part = load_dataset(p.string(), traces);
    all.insert(all.end(), part.begin(), part.end());
  }

  std::vector<EpochRecord> log;
  Ensemble next = train_ensemble(all, validation, config.train_config(),
                                 stream_seed(config.seed, "train",
                                             static_cast<uint64_t>(opts.round)),
                                 &log);
  const std::string dir = round_dir(run, opts.round);
  fs::create_directories(dir);
  save_ensemble(dir, next, config.seed, opts.round);
  std::ofstream lf(fs::path(dir) / "training_log.csv");
  write_epoch_log(lf, log);
  std::cout << "train: round " << opts.round << " on " << all.size() << " examples\n";
  return 0;
}

int cmd_evaluate(const CommonOpts& opts) {
  Config config = resolve_config(opts, true);
  const std::string run = run_dir(opts.out_dir, config);
  std::vector<Trace> traces = load_round_traces(config, run, opts.round);
  std::vector<MetricRow> rows = round_metrics(opts.round, traces, config);
  std::ofstream mcsv(fs::path(round_dir(run, opts.round)) / "metrics.csv");
  write_metrics_csv(mcsv, rows);
  write_metrics_csv(std::cout, rows);
  return 0;
}

int cmd_run(const CommonOpts& opts) {
  Config config = resolve_config(opts, false);
  std::vector<MetricRow> metrics = run_experiment(config, opts.out_dir);
  for (const MetricRow& m : metrics)
    if (m.metric == "ground_truth_accuracy")
      std::cout << "round " << m.round << " ground_truth_accuracy " << m.value << "\n";
  std::cout << "run complete: " << run_dir(opts.out_dir, config) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continual instruction-following on a hex grid: deploy, attribute rewards, retrain"};
  app.require_subcommand(1);

  CommonOpts opts;
  auto* c_bootstrap = app.add_subcommand("bootstrap", "generate demos and train theta_1");
  auto* c_deploy = app.add_subcommand("deploy", "roll out the previous round's ensemble");
  auto* c_dataset = app.add_subcommand("build-dataset", "traces -> rewarded examples");
  auto* c_train = app.add_subcommand("train", "retrain from scratch on rounds 0..k");
  auto* c_eval = app.add_subcommand("evaluate", "metrics for a round's traces");
  auto* c_run = app.add_subcommand("run", "full experiment: bootstrap + all rounds");
  add_common(c_bootstrap, opts, false);
  add_common(c_deploy, opts, true);
  add_common(c_dataset, opts, true);
  add_common(c_train, opts, true);
  add_common(c_eval, opts, true);
  add_common(c_run, opts, false);

  CLI11_PARSE(app, argc, argv);
  try {
    if (c_bootstrap->parsed()) return cmd_bootstrap(opts);
    if (c_deploy->parsed()) return cmd_deploy(opts);
    if (c_dataset->parsed()) return cmd_build_dataset(opts);
    if (c_train->parsed()) return cmd_train(opts);
    if (c_eval->parsed()) return cmd_evaluate(opts);
    if (c_run->parsed()) return cmd_run(opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
