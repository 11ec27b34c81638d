#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "hexbandit/policy.hpp"
#include "hexbandit/simleader.hpp"

using namespace hexbandit;

namespace {

ScenarioConfig small_config() {
  ScenarioConfig sc;
  sc.world.grid_edge = 15;
  sc.world.obstacle_count = 18;
  sc.world.card_count = 12;
  sc.world.visibility_radius = 6;
  sc.max_targets = 2;
  sc.max_plan_actions = 20;
  return sc;
}

bool scenarios_equal(const Scenario& a, const Scenario& b) {
  return a.state.cards == b.state.cards && *a.state.obstacles == *b.state.obstacles &&
         a.state.follower == b.state.follower && a.state.leader == b.state.leader &&
         a.instruction == b.instruction &&
         a.plan.optimal_actions == b.plan.optimal_actions &&
         a.plan.stop_position == b.plan.stop_position;
}

// Straight-line fixture: empty 9x9 board, one target card three cells north
// of the follower, follower facing north.
struct LineFixture {
  Scenario scenario;

  LineFixture() {
    WorldState s;
    s.config.grid_edge = 9;
    s.obstacles = std::make_shared<std::set<AxialCoord>>();
    s.follower = {offset_to_axial({4, 6}), Heading{0}};
    s.leader = {offset_to_axial({0, 0}), Heading{0}};
    AxialCoord target = s.follower.position + AxialCoord{0, -3};
    s.cards.push_back({0, target, 2, 3, 1, false});
    s.next_card_id = 1;

    Plan plan;
    plan.targets.push_back({0, target});
    plan.stop_position = target;
    plan.optimal_actions = {Action::Forward, Action::Forward, Action::Forward, Action::Stop};
    plan.waypoints = {s.follower.position, s.follower.position + AxialCoord{0, -1},
                      s.follower.position + AxialCoord{0, -2}, target};
    scenario.seed = 0;
    scenario.state = s;
    scenario.plan = plan;
    scenario.instruction = {"get", "the", "one", "yellow", "club"};
  }
};

}  // namespace

TEST_CASE("generate_scenario is deterministic in the seed") {
  ScenarioConfig sc = small_config();
  Scenario a = generate_scenario(17, sc);
  Scenario b = generate_scenario(17, sc);
  CHECK(scenarios_equal(a, b));
  Scenario c = generate_scenario(18, sc);
  CHECK_FALSE(scenarios_equal(a, c));
}

TEST_CASE("plan replay reaches the stop cell and toggles exactly the targets") {
  ScenarioConfig sc = small_config();
  for (uint64_t seed = 0; seed < 50; ++seed) {
    Scenario s = generate_scenario(seed, sc);
    auto states = replay_states(s);  // throws on any violation
    CHECK(states.back().follower.position == s.plan.stop_position);
    CHECK(states.back().instruction_complete);
    CHECK(s.plan.optimal_actions.size() <= static_cast<size_t>(sc.max_plan_actions));
  }
}

TEST_CASE("1000 seeds produce plans that never hit an obstacle") {
  ScenarioConfig sc = small_config();
  int failures = 0;
  for (uint64_t seed = 1000; seed < 2000; ++seed) {
    Scenario s = generate_scenario(seed, sc);
    try {
      for (const WorldState& st : replay_states(s))
        if (st.is_obstacle(st.follower.position)) failures += 1;
    } catch (const std::exception&) {
      failures += 1;
    }
  }
  CHECK(failures == 0);
}

TEST_CASE("on-plan actions earn +1, off-plan actions earn -1") {
  LineFixture fx;
  OracleConfig oc;
  oc.feedback_prob = 1.0;
  oc.sign_error_rate = 0.0;

  SUBCASE("forward toward the target") {
    LeaderOracle oracle(fx.scenario.plan, oc, 1);
    StepResult res = apply_action(fx.scenario.state, Action::Forward);
    auto fb = oracle.emit_feedback(fx.scenario.state, Action::Forward, res, 0.0);
    REQUIRE(fb.has_value());
    CHECK(fb->sign == +1);
    CHECK(fb->wall_time > 0.0);
    CHECK(fb->wall_time >= oc.delay_min);
    CHECK(fb->wall_time < oc.delay_max);
  }

  SUBCASE("turning away from a target straight ahead") {
    LeaderOracle oracle(fx.scenario.plan, oc, 1);
    StepResult res = apply_action(fx.scenario.state, Action::Right);
    auto fb = oracle.emit_feedback(fx.scenario.state, Action::Right, res, 0.0);
    REQUIRE(fb.has_value());
    CHECK(fb->sign == -1);
  }

  SUBCASE("premature STOP") {
    LeaderOracle oracle(fx.scenario.plan, oc, 1);
    StepResult res = apply_action(fx.scenario.state, Action::Stop);
    auto fb = oracle.emit_feedback(fx.scenario.state, Action::Stop, res, 0.0);
    REQUIRE(fb.has_value());
    CHECK(fb->sign == -1);
  }

  SUBCASE("STOP on the stop cell after all targets") {
    LeaderOracle oracle(fx.scenario.plan, oc, 1);
    WorldState s = fx.scenario.state;
    for (Action a : {Action::Forward, Action::Forward, Action::Forward}) {
      StepResult res = apply_action(s, a);
      oracle.emit_feedback(s, a, res, s.clock);
      s = res.state;
    }
    CHECK(oracle.targets_done() == 1);
    StepResult stop = apply_action(s, Action::Stop);
    auto fb = oracle.emit_feedback(s, Action::Stop, stop, s.clock);
    REQUIRE(fb.has_value());
    CHECK(fb->sign == +1);
  }
}

TEST_CASE("sign error rate flips roughly 7% of on-plan signals") {
  LineFixture fx;
  OracleConfig oc;
  oc.feedback_prob = 1.0;
  oc.sign_error_rate = 0.07;
  LeaderOracle oracle(fx.scenario.plan, oc, 99);
  StepResult res = apply_action(fx.scenario.state, Action::Forward);

  int negatives = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto fb = oracle.emit_feedback(fx.scenario.state, Action::Forward, res, 0.0);
    REQUIRE(fb.has_value());
    if (fb->sign == -1) negatives += 1;
  }
  double fraction = static_cast<double>(negatives) / n;
  CHECK(fraction > 0.06);
  CHECK(fraction < 0.08);
}

TEST_CASE("feedback is deterministic given the same prefix, plan and seed") {
  LineFixture fx;
  OracleConfig oc;
  oc.feedback_prob = 0.7;
  oc.sign_error_rate = 0.1;
  LeaderOracle a(fx.scenario.plan, oc, 5);
  LeaderOracle b(fx.scenario.plan, oc, 5);
  WorldState s = fx.scenario.state;
  double t = 0.0;
  for (Action act : fx.scenario.plan.optimal_actions) {
    StepResult res = apply_action(s, act);
    auto fa = a.emit_feedback(s, act, res, t);
    auto fb = b.emit_feedback(s, act, res, t);
    CHECK(fa.has_value() == fb.has_value());
    if (fa && fb) {
      CHECK(fa->sign == fb->sign);
      CHECK(fa->wall_time == fb->wall_time);
    }
    s = res.state;
    t += 0.5;
  }
}

TEST_CASE("optimal replay with no noise: every signal +1, never rebooted") {
  ScenarioConfig sc = small_config();
  OracleConfig oc;
  oc.feedback_prob = 1.0;
  oc.sign_error_rate = 0.0;
  for (uint64_t seed = 0; seed < 40; ++seed) {
    Scenario scenario = generate_scenario(seed, sc);
    LeaderOracle oracle(scenario.plan, oc, seed);
    WorldState s = scenario.state;
    for (Action a : scenario.plan.optimal_actions) {
      StepResult res = apply_action(s, a);
      auto fb = oracle.emit_feedback(s, a, res, s.clock);
      REQUIRE(fb.has_value());
      CHECK(fb->sign == +1);
      CHECK(fb->wall_time > s.clock);
      CHECK_FALSE(oracle.maybe_reboot(res));
      s = res.state;
    }
  }
}

TEST_CASE("reboot triggers on deviation beyond the threshold") {
  LineFixture fx;
  OracleConfig oc;
  oc.reboot_deviation = 3;
  LeaderOracle oracle(fx.scenario.plan, oc, 1);

  StepResult on_path = apply_action(fx.scenario.state, Action::Forward);
  CHECK_FALSE(oracle.maybe_reboot(on_path));

  // Teleport the follower threshold+1 cells east of everything on the plan.
  StepResult far = on_path;
  far.state.follower.position = fx.scenario.state.follower.position + AxialCoord{6, 0};
  CHECK(oracle.maybe_reboot(far));
}

TEST_CASE("stray card selection reboots; correcting it does not") {
  LineFixture fx;
  OracleConfig oc;
  oc.feedback_prob = 0.0;
  // extra non-plan card right of the follower
  Scenario scenario = fx.scenario;
  AxialCoord stray = scenario.state.follower.position + kHexDirections[1];
  scenario.state.cards.push_back({1, stray, 5, 5, 3, false});
  LeaderOracle oracle(scenario.plan, oc, 1);

  WorldState s = scenario.state;
  StepResult turn = apply_action(s, Action::Right);
  oracle.emit_feedback(s, Action::Right, turn, 0.0);
  CHECK_FALSE(oracle.maybe_reboot(turn));

  StepResult onto = apply_action(turn.state, Action::Forward);
  REQUIRE(onto.toggle.has_value());
  oracle.emit_feedback(turn.state, Action::Forward, onto, 0.5);
  CHECK(oracle.maybe_reboot(onto));  // new stray selection

  // A fresh oracle that sees the stray selection and then the correction.
  LeaderOracle oracle2(scenario.plan, oc, 1);
  oracle2.emit_feedback(s, Action::Right, turn, 0.0);
  oracle2.emit_feedback(turn.state, Action::Forward, onto, 0.5);
  StepResult off = apply_action(onto.state, Action::Backward);
  oracle2.emit_feedback(onto.state, Action::Backward, off, 1.0);
  StepResult fix = apply_action(off.state, Action::Forward);
  REQUIRE(fix.toggle.has_value());
  CHECK_FALSE(fix.toggle->now_selected);
  oracle2.emit_feedback(off.state, Action::Forward, fix, 1.5);
  CHECK_FALSE(oracle2.maybe_reboot(fix));
}

TEST_CASE("random policy reboots more than optimal replay over 500 episodes") {
  ScenarioConfig sc = small_config();
  OracleConfig oc;
  oc.feedback_prob = 0.5;
  DistributionSource uniform = [](const std::vector<std::string>&, const Observation&,
                                  const ActionMask& mask) {
    ActionDistribution d{};
    int n = 0;
    for (bool m : mask) n += m ? 1 : 0;
    for (size_t a = 0; a < kNumActions; ++a) d[a] = mask[a] ? 1.0 / n : 0.0;
    return d;
  };

  int random_reboots = 0, optimal_reboots = 0;
  for (uint64_t i = 0; i < 500; ++i) {
    Scenario scenario = generate_scenario(3000 + i, sc);
    LeaderOracle oracle(scenario.plan, oc, i);
    Rng rng(i * 7 + 1);
    Trace t = sample_rollout(uniform, scenario, oracle, rng, 30, "rnd", 1);
    if (t.rebooted) random_reboots += 1;

    LeaderOracle oracle2(scenario.plan, oc, i);
    WorldState s = scenario.state;
    for (Action a : scenario.plan.optimal_actions) {
      StepResult res = apply_action(s, a);
      oracle2.emit_feedback(s, a, res, s.clock);
      if (oracle2.maybe_reboot(res)) optimal_reboots += 1;
      s = res.state;
    }
  }
  CHECK(optimal_reboots == 0);
  CHECK(random_reboots > optimal_reboots);
  CHECK(random_reboots >= 10);
}

TEST_CASE("instruction descriptors parse back to the target cards") {
  ScenarioConfig sc = small_config();
  int full_descriptors = 0;
  for (uint64_t seed = 0; seed < 200; ++seed) {
    Scenario s = generate_scenario(seed, sc);
    auto descriptors = parse_descriptors(s.instruction);
    REQUIRE(!descriptors.empty());
    for (const PlanTarget& target : s.plan.targets) {
      const Card* card = s.state.card_at(target.position);
      REQUIRE(card != nullptr);
      bool matched = false;
      for (const CardDescriptor& d : descriptors)
        matched = matched || matches_descriptor(*card, d);
      CHECK(matched);
    }
    if (descriptors[0].color >= 0 && descriptors[0].count >= 0) full_descriptors += 1;
  }
  CHECK(full_descriptors > 100);  // most instructions carry the full descriptor
}
