#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hexbandit/orchestrator.hpp"

using namespace hexbandit;
namespace fs = std::filesystem;

namespace {

Config smoke_config(const std::string& name) {
  Config c;
  c.run_name = name;
  c.seed = 21;
  c.rounds = 2;
  c.interactions_per_round = 6;
  c.demo_scenarios = 16;
  c.grid_edge = 15;
  c.obstacle_count = 15;
  c.card_count = 10;
  c.max_steps = 25;
  c.feature_dim = 8192;
  c.ensemble_size = 2;
  c.max_epochs = 4;
  c.patience = 2;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("hxb_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config round-trips through JSON and rejects unknown keys") {
  Config c = smoke_config("cfg");
  c.learning_rate = 0.0042;
  std::string text = config_to_json_text(c);
  Config back = config_from_json_text(text);
  CHECK(back.run_name == c.run_name);
  CHECK(back.learning_rate == c.learning_rate);
  CHECK(back.seed == c.seed);
  CHECK(back.feature_dim == c.feature_dim);
  CHECK_THROWS_AS(config_from_json_text("{\"no_such_key\": 3}"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json_text("[1,2]"), std::invalid_argument);
}

TEST_CASE("smoke experiment writes all artifacts and is resumable from disk") {
  TempDir tmp("smoke");
  Config c = smoke_config("smoke");
  c.rounds = 1;
  c.interactions_per_round = 5;
  std::vector<MetricRow> metrics = run_experiment(c, tmp.path.string());
  CHECK(!metrics.empty());

  const std::string run = run_dir(tmp.path.string(), c);
  CHECK(fs::exists(fs::path(run) / "config.json"));
  CHECK(fs::exists(fs::path(run) / "metrics.csv"));
  for (int round = 0; round <= 1; ++round) {
    fs::path dir = round_dir(run, round);
    CHECK(fs::exists(dir / "traces.jsonl"));
    CHECK(fs::exists(dir / "dataset.jsonl"));
    CHECK(fs::exists(dir / "training_log.csv"));
    CHECK(fs::exists(dir / "metrics.csv"));
    for (int m = 0; m < c.ensemble_size; ++m)
      CHECK(fs::exists(dir / ("member_" + std::to_string(m) + ".ckpt")));
  }

  SUBCASE("persisted traces re-deserialize and pass the trace invariants") {
    for (int round = 0; round <= 1; ++round) {
      auto traces = load_traces((fs::path(round_dir(run, round)) / "traces.jsonl").string(),
                                c.scenario_config());
      CHECK(!traces.empty());
      for (const Trace& t : traces) CHECK_NOTHROW(validate_trace(t));
    }
  }

  SUBCASE("persisted datasets join back to their traces by digest") {
    auto traces = load_traces((fs::path(round_dir(run, 1)) / "traces.jsonl").string(),
                              c.scenario_config());
    auto dataset = load_dataset((fs::path(round_dir(run, 1)) / "dataset.jsonl").string(),
                                traces);
    for (const RewardedExample& ex : dataset) {
      CHECK((ex.reward == 1 || ex.reward == -1));
      CHECK(ex.round == 1);
    }
    // at most one example per executed step
    long steps = 0;
    for (const Trace& t : traces) steps += static_cast<long>(t.steps.size());
    CHECK(static_cast<long>(dataset.size()) <= steps);
  }

  SUBCASE("checkpoints reload into a working ensemble") {
    Ensemble e = load_ensemble(round_dir(run, 1), c.ensemble_size);
    CHECK(e.members.size() == static_cast<size_t>(c.ensemble_size));
    CHECK(e.members[0].dim() == c.feature_dim);
  }
}

TEST_CASE("identical seed and config reproduce byte-identical artifacts") {
  TempDir tmp("det");
  Config c = smoke_config("det");
  run_experiment(c, (tmp.path / "a").string());
  run_experiment(c, (tmp.path / "b").string());

  const std::string ra = run_dir((tmp.path / "a").string(), c);
  const std::string rb = run_dir((tmp.path / "b").string(), c);
  CHECK(slurp(fs::path(ra) / "metrics.csv") == slurp(fs::path(rb) / "metrics.csv"));
  for (int round = 0; round <= c.rounds; ++round) {
    CHECK(slurp(fs::path(round_dir(ra, round)) / "traces.jsonl") ==
          slurp(fs::path(round_dir(rb, round)) / "traces.jsonl"));
    CHECK(slurp(fs::path(round_dir(ra, round)) / "dataset.jsonl") ==
          slurp(fs::path(round_dir(rb, round)) / "dataset.jsonl"));
    CHECK(slurp(fs::path(round_dir(ra, round)) / "member_0.ckpt") ==
          slurp(fs::path(round_dir(rb, round)) / "member_0.ckpt"));
  }
}

TEST_CASE("variant pipelines: dataset contents and shared round-1 deployment") {
  TempDir tmp("var");
  Config base = smoke_config("base");
  base.rounds = 1;

  Config rp = base;
  rp.run_name = "rp";
  rp.variant = "RewardProp";
  run_experiment(rp, tmp.path.string());

  Config sr = base;
  sr.run_name = "sr";
  sr.variant = "SimpleReward";
  run_experiment(sr, tmp.path.string());

  Config nn = base;
  nn.run_name = "nn";
  nn.variant = "NoNegative";
  run_experiment(nn, tmp.path.string());

  Config sup = base;
  sup.run_name = "sup";
  sup.variant = "SupOnly";
  run_experiment(sup, tmp.path.string());

  const std::string rp_dir = run_dir(tmp.path.string(), rp);
  const std::string sr_dir = run_dir(tmp.path.string(), sr);
  const std::string nn_dir = run_dir(tmp.path.string(), nn);
  const std::string sup_dir = run_dir(tmp.path.string(), sup);

  SUBCASE("variant isolation: identical round-1 traces from the same seed") {
    std::string a = slurp(fs::path(round_dir(rp_dir, 1)) / "traces.jsonl");
    std::string b = slurp(fs::path(round_dir(sr_dir, 1)) / "traces.jsonl");
    std::string c = slurp(fs::path(round_dir(nn_dir, 1)) / "traces.jsonl");
    CHECK(a == b);
    CHECK(a == c);
  }

  SUBCASE("NoNegative dataset has no negative rewards") {
    auto traces = load_traces((fs::path(round_dir(nn_dir, 1)) / "traces.jsonl").string(),
                              nn.scenario_config());
    auto dataset =
        load_dataset((fs::path(round_dir(nn_dir, 1)) / "dataset.jsonl").string(), traces);
    CHECK(!dataset.empty());
    for (const RewardedExample& ex : dataset) CHECK(ex.reward == +1);
  }

  SUBCASE("SupOnly dataset is demonstration data only") {
    std::ifstream f(fs::path(round_dir(sup_dir, 1)) / "dataset.jsonl");
    REQUIRE(f.good());
    std::string line;
    int rows = 0;
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      rows += 1;
      CHECK(line.find("\"reward\":1") != std::string::npos);
      CHECK(line.find("\"round\":0") != std::string::npos);
      CHECK(line.find("\"behavior_prob\":1.0") != std::string::npos);
    }
    CHECK(rows > 0);
  }

  SUBCASE("cumulative example count is nondecreasing") {
    auto rows = read_metrics_csv((fs::path(rp_dir) / "metrics.csv").string());
    double prev = 0.0;
    for (const MetricRow& r : rows) {
      if (r.metric != "cumulative_examples") continue;
      CHECK(r.value >= prev);
      prev = r.value;
    }
  }
}

TEST_CASE("FewerDemo bootstraps with about a quarter of the demonstrations") {
  Config full = smoke_config("fd_full");
  full.demo_scenarios = 40;
  Config fewer = full;
  fewer.variant = "FewerDemo";

  BootstrapResult a = bootstrap(full);
  BootstrapResult b = bootstrap(fewer);
  double ratio = static_cast<double>(b.dataset.size()) / static_cast<double>(a.dataset.size());
  CHECK(ratio > 0.15);
  CHECK(ratio < 0.35);
}

TEST_CASE("bootstrap beats the untrained baseline on validation SWSD") {
  Config c = smoke_config("boot");
  c.demo_scenarios = 30;
  c.max_epochs = 6;
  BootstrapResult boot = bootstrap(c);

  auto mean_val = [&](const PolicyParams& p) {
    double total = 0.0;
    for (const Scenario& s : boot.validation) {
      RolloutOutcome ro = greedy_outcome(p, s, c.max_steps);
      ExecutionOutcome agent;
      std::map<int, int> parity;
      for (const ToggleEvent& te : ro.toggles) parity[te.card_id] += 1;
      for (const auto& [id, count] : parity)
        if (count % 2 == 1) agent.net_selected_ids.push_back(id);
      agent.stop_position = ro.stop_position;
      total += swsd(agent, reference_outcome(s.plan));
    }
    return total / static_cast<double>(boot.validation.size());
  };

  PolicyParams untrained(c.feature_dim);
  double trained = mean_val(boot.ensemble.members[0]);
  double baseline = mean_val(untrained);
  CHECK(trained >= baseline);
}
