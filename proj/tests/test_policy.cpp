#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <set>

#include "hexbandit/policy.hpp"

using namespace hexbandit;

namespace {

constexpr uint32_t kDim = 1u << 14;

Observation random_observation(Rng& rng, int n_cards = 6) {
  Observation o;
  o.grid_edge = 15;
  o.visibility_radius = 6;
  o.obstacles = std::make_shared<std::set<AxialCoord>>();
  o.follower = {{rng.uniform_int(3, 11), rng.uniform_int(-4, 4)},
                Heading{rng.uniform_int(0, 5)}};
  o.step = rng.uniform_int(0, 10);
  std::set<AxialCoord> used;
  for (int i = 0; i < n_cards; ++i) {
    KnownCard k;
    do {
      k.card.position = {rng.uniform_int(0, 14), rng.uniform_int(-7, 7)};
    } while (!used.insert(k.card.position).second);
    k.card.id = i;
    k.card.color = rng.uniform_int(0, 5);
    k.card.shape = rng.uniform_int(0, 5);
    k.card.count = rng.uniform_int(1, 3);
    k.card.selected = rng.bernoulli(0.3);
    k.last_seen = o.step;
    k.visible = rng.bernoulli(0.7);
    o.cards.push_back(k);
  }
  std::sort(o.cards.begin(), o.cards.end(), [](const KnownCard& a, const KnownCard& b) {
    return a.card.position < b.card.position;
  });
  o.trajectory.push_back(o.follower.position);
  return o;
}

std::vector<std::string> random_instruction(Rng& rng) {
  std::vector<std::string> words{"get", "the"};
  words.push_back(kCountWords[rng.next_below(3)]);
  words.push_back(kColorWords[rng.next_below(6)]);
  words.push_back(kShapeWords[rng.next_below(6)]);
  return words;
}

PolicyParams random_params(Rng& rng, double scale = 0.5) {
  PolicyParams p(kDim);
  for (Eigen::Index i = 0; i < p.dim(); ++i) p.weights[i] = rng.uniform(-scale, scale);
  return p;
}

Eigen::VectorXd densify(const FeatureVector& fv, Eigen::Index dim) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
  for (const auto& [i, v] : fv.entries) out[static_cast<Eigen::Index>(i)] += v;
  return out;
}

const ActionMask kAllMask{true, true, true, true, true};

}  // namespace

TEST_CASE("featurize is deterministic and action-sensitive") {
  Rng rng(1);
  Observation o = random_observation(rng);
  auto instruction = random_instruction(rng);
  FeatureVector a = featurize(instruction, o, Action::Forward, kDim);
  FeatureVector b = featurize(instruction, o, Action::Forward, kDim);
  CHECK(a.entries == b.entries);

  FeatureVector c = featurize(instruction, o, Action::Left, kDim);
  CHECK(a.entries != c.entries);
}

TEST_CASE("jointly rotating world and agent leaves features unchanged") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    Observation o = random_observation(rng);
    auto instruction = random_instruction(rng);

    Observation rotated = o;
    rotated.follower.position = rotate_cw(o.follower.position);
    rotated.follower.heading = o.follower.heading.turned(1);
    for (KnownCard& k : rotated.cards) k.card.position = rotate_cw(k.card.position);
    std::sort(rotated.cards.begin(), rotated.cards.end(),
              [](const KnownCard& a, const KnownCard& b) {
                return a.card.position < b.card.position;
              });
    for (AxialCoord& c : rotated.trajectory) c = rotate_cw(c);

    for (Action a : kAllActions) {
      FeatureVector fa = featurize(instruction, o, a, kDim);
      FeatureVector fb = featurize(instruction, rotated, a, kDim);
      // same multiset of (index, value) pairs
      auto sa = fa.entries, sb = fb.entries;
      std::sort(sa.begin(), sa.end());
      std::sort(sb.begin(), sb.end());
      CHECK(sa == sb);
    }
  }
}

TEST_CASE("action_distribution: uniform under zero weights, masking, oracle check") {
  Rng rng(3);
  Observation o = random_observation(rng);
  auto instruction = random_instruction(rng);
  PolicyParams zero(kDim);

  ActionDistribution d = action_distribution(zero, instruction, o, kAllMask);
  for (double p : d) CHECK(p == doctest::Approx(0.2).epsilon(1e-12));

  ActionMask no_forward = kAllMask;
  no_forward[static_cast<size_t>(Action::Forward)] = false;
  ActionDistribution d4 = action_distribution(zero, instruction, o, no_forward);
  CHECK(d4[static_cast<size_t>(Action::Forward)] == 0.0);
  for (size_t a = 1; a < kNumActions; ++a) CHECK(d4[a] == doctest::Approx(0.25).epsilon(1e-12));

  // long-double exp-normalize oracle on random weights
  for (int trial = 0; trial < 50; ++trial) {
    PolicyParams p = random_params(rng);
    Observation obs = random_observation(rng);
    auto ins = random_instruction(rng);
    ActionDistribution actual = action_distribution(p, ins, obs, kAllMask);

    long double scores[kNumActions];
    for (size_t a = 0; a < kNumActions; ++a) {
      FeatureVector fv = featurize(ins, obs, static_cast<Action>(a), kDim);
      long double s = 0.0L;
      for (const auto& [i, v] : fv.entries)
        s += static_cast<long double>(p.weights[static_cast<Eigen::Index>(i)]) * v;
      scores[a] = s;
    }
    long double z = 0.0L;
    for (size_t a = 0; a < kNumActions; ++a) z += expl(scores[a]);
    for (size_t a = 0; a < kNumActions; ++a) {
      double expected = static_cast<double>(expl(scores[a]) / z);
      CHECK(actual[a] == doctest::Approx(expected).epsilon(1e-10));
    }
    double sum = 0.0;
    for (double v : actual) sum += v;
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("softmax shift invariance via the per-action bias feature") {
  Rng rng(4);
  Observation o = random_observation(rng);
  auto instruction = random_instruction(rng);
  PolicyParams p = random_params(rng);
  ActionDistribution before = action_distribution(p, instruction, o, kAllMask);

  // the bias feature appears exactly once per action; bumping every action's
  // bias weight by the same constant shifts all scores equally
  PolicyParams shifted = p;
  for (Action a : kAllActions) {
    std::string key = std::string("b|") + action_name(a);
    shifted.weights[static_cast<Eigen::Index>(fnv1a64(key) % kDim)] += 3.7;
  }
  ActionDistribution after = action_distribution(shifted, instruction, o, kAllMask);
  for (size_t a = 0; a < kNumActions; ++a)
    CHECK(before[a] == doctest::Approx(after[a]).epsilon(1e-9));
}

TEST_CASE("logprob_grad matches central finite differences") {
  Rng rng(5);
  double worst = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    PolicyParams p = random_params(rng);
    Observation o = random_observation(rng);
    auto ins = random_instruction(rng);
    Action a = static_cast<Action>(rng.next_below(kNumActions));

    FeatureVector grad = logprob_grad(p, ins, o, a, kAllMask);
    Eigen::VectorXd dense = densify(grad, kDim);

    // indices touched by any action's features
    std::set<uint32_t> touched;
    for (Action b : kAllActions)
      for (const auto& [i, v] : featurize(ins, o, b, kDim).entries) {
        (void)v;
        touched.insert(i);
      }

    const double h = 1e-5;
    double max_abs = dense.cwiseAbs().maxCoeff();
    for (uint32_t i : touched) {
      PolicyParams plus = p, minus = p;
      plus.weights[i] += h;
      minus.weights[i] -= h;
      double lp = std::log(action_distribution(plus, ins, o, kAllMask)[static_cast<size_t>(a)]);
      double lm = std::log(action_distribution(minus, ins, o, kAllMask)[static_cast<size_t>(a)]);
      double fd = (lp - lm) / (2 * h);
      worst = std::max(worst, std::abs(fd - dense[i]) / std::max(1.0, max_abs));
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("logprob_grad edge cases") {
  Rng rng(6);
  Observation o = random_observation(rng);
  auto ins = random_instruction(rng);
  PolicyParams p = random_params(rng);

  SUBCASE("masked-out action is rejected") {
    ActionMask only_stop{};
    only_stop[static_cast<size_t>(Action::Stop)] = true;
    CHECK_THROWS_AS(logprob_grad(p, ins, o, Action::Forward, only_stop),
                    std::invalid_argument);
  }

  SUBCASE("single executable action has zero gradient") {
    ActionMask only_stop{};
    only_stop[static_cast<size_t>(Action::Stop)] = true;
    FeatureVector g = logprob_grad(p, ins, o, Action::Stop, only_stop);
    CHECK(densify(g, kDim).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-15));
  }

  SUBCASE("expected gradient under the policy is zero") {
    ActionDistribution probs = action_distribution(p, ins, o, kAllMask);
    Eigen::VectorXd expectation = Eigen::VectorXd::Zero(kDim);
    for (size_t a = 0; a < kNumActions; ++a)
      expectation += probs[a] * densify(logprob_grad(p, ins, o, static_cast<Action>(a), kAllMask), kDim);
    CHECK(expectation.cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("ensemble voting distribution") {
  Rng rng(7);
  Observation o = random_observation(rng);
  auto ins = random_instruction(rng);

  // rig members' argmax through the per-action bias weight
  auto biased_member = [&](Action a) {
    PolicyParams p(kDim);
    std::string key = std::string("b|") + action_name(a);
    p.weights[static_cast<Eigen::Index>(fnv1a64(key) % kDim)] = 5.0;
    return p;
  };

  SUBCASE("7 FORWARD votes and 3 LEFT votes") {
    Ensemble e;
    for (int i = 0; i < 7; ++i) e.members.push_back(biased_member(Action::Forward));
    for (int i = 0; i < 3; ++i) e.members.push_back(biased_member(Action::Left));
    ActionDistribution d = ensemble_distribution(e, ins, o, kAllMask);
    // hand-computed softmax of vote counts (7, 0, 3, 0, 0)
    const double e7 = 1096.6331584284585;
    const double e3 = 20.085536923187668;
    const double z = e7 + e3 + 3.0;
    CHECK(d[0] == doctest::Approx(e7 / z).epsilon(1e-12));
    CHECK(d[1] == doctest::Approx(1.0 / z).epsilon(1e-12));
    CHECK(d[2] == doctest::Approx(e3 / z).epsilon(1e-12));
    CHECK(d[3] == doctest::Approx(1.0 / z).epsilon(1e-12));
    CHECK(d[4] == doctest::Approx(1.0 / z).epsilon(1e-12));
  }

  SUBCASE("m=1: argmax action gets the single vote") {
    Ensemble e;
    e.members.push_back(biased_member(Action::Right));
    ActionDistribution d = ensemble_distribution(e, ins, o, kAllMask);
    const double e1 = 2.718281828459045;
    const double z = e1 + 4.0;
    CHECK(d[static_cast<size_t>(Action::Right)] == doctest::Approx(e1 / z).epsilon(1e-12));
    CHECK(d[0] == doctest::Approx(1.0 / z).epsilon(1e-12));
  }

  SUBCASE("identical members behave like m=1 with vote weight m") {
    Ensemble e;
    for (int i = 0; i < 6; ++i) e.members.push_back(biased_member(Action::Backward));
    ActionDistribution d = ensemble_distribution(e, ins, o, kAllMask);
    const double e6 = 403.4287934927351;
    const double z = e6 + 4.0;
    CHECK(d[static_cast<size_t>(Action::Backward)] == doctest::Approx(e6 / z).epsilon(1e-12));
  }

  SUBCASE("masked actions have probability exactly zero") {
    Ensemble e;
    for (int i = 0; i < 5; ++i) e.members.push_back(biased_member(Action::Forward));
    ActionMask mask = kAllMask;
    mask[static_cast<size_t>(Action::Backward)] = false;
    ActionDistribution d = ensemble_distribution(e, ins, o, mask);
    CHECK(d[static_cast<size_t>(Action::Backward)] == 0.0);
    double sum = 0.0;
    for (double v : d) sum += v;
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }

  SUBCASE("m=1 ensemble argmax equals the member argmax on 1000 random cases") {
    for (int trial = 0; trial < 1000; ++trial) {
      PolicyParams p = random_params(rng);
      Observation obs = random_observation(rng);
      auto instruction = random_instruction(rng);
      Ensemble e;
      e.members.push_back(p);
      ActionDistribution d = ensemble_distribution(e, instruction, obs, kAllMask);
      size_t ensemble_argmax = 0;
      for (size_t a = 1; a < kNumActions; ++a)
        if (d[a] > d[ensemble_argmax]) ensemble_argmax = a;
      CHECK(static_cast<Action>(ensemble_argmax) ==
            member_argmax(p, instruction, obs, kAllMask));
    }
  }
}

TEST_CASE("sample_rollout") {
  ScenarioConfig sc;
  sc.world.grid_edge = 15;
  sc.world.obstacle_count = 15;
  sc.world.card_count = 10;
  Scenario scenario = generate_scenario(5, sc);
  OracleConfig oc;

  SUBCASE("scripted plan source reproduces the optimal replay") {
    size_t cursor = 0;
    DistributionSource scripted = [&](const std::vector<std::string>&, const Observation&,
                                      const ActionMask&) {
      ActionDistribution d{};
      d[static_cast<size_t>(scenario.plan.optimal_actions[cursor++])] = 1.0;
      return d;
    };
    LeaderOracle oracle(scenario.plan, oc, 1);
    Rng rng(1);
    Trace t = sample_rollout(scripted, scenario, oracle, rng, 40, "demo", 1);
    CHECK(t.completed());
    CHECK_FALSE(t.rebooted);
    CHECK(t.final_pose.position == scenario.plan.stop_position);
    REQUIRE(t.steps.size() == scenario.plan.optimal_actions.size());
    for (size_t i = 0; i < t.steps.size(); ++i) {
      CHECK(t.steps[i].action == scenario.plan.optimal_actions[i]);
      CHECK(t.steps[i].behavior_prob == 1.0);
    }

    Trace demo = demonstration_trace(scenario, "demo2");
    REQUIRE(demo.steps.size() == t.steps.size());
    for (size_t i = 0; i < t.steps.size(); ++i) {
      CHECK(demo.steps[i].action == t.steps[i].action);
      CHECK(demo.steps[i].wall_time == t.steps[i].wall_time);
    }
  }

  SUBCASE("max_steps=1 yields a single step") {
    DistributionSource forward_only = [](const std::vector<std::string>&,
                                         const Observation&, const ActionMask& mask) {
      ActionDistribution d{};
      if (mask[0])
        d[0] = 1.0;
      else
        d[static_cast<size_t>(Action::Left)] = 1.0;
      return d;
    };
    LeaderOracle oracle(scenario.plan, oc, 2);
    Rng rng(2);
    Trace t = sample_rollout(forward_only, scenario, oracle, rng, 1, "one", 1);
    CHECK(t.steps.size() == 1);
    CHECK(t.truncated());
  }

  SUBCASE("recorded behavior probabilities match the sampling distribution") {
    Ensemble e;
    Rng init(3);
    for (int i = 0; i < 3; ++i) e.members.push_back(random_params(init, 0.05));
    LeaderOracle oracle(scenario.plan, oc, 3);
    Rng rng(3);
    Trace t = sample_rollout(ensemble_source(e), scenario, oracle, rng, 25, "ens", 1);
    for (const TraceStep& s : t.steps) {
      ActionMask mask = mask_from_actions(executable_actions(s.observation));
      ActionDistribution d = ensemble_distribution(e, t.instruction, s.observation, mask);
      CHECK(s.behavior_prob == d[static_cast<size_t>(s.action)]);
      CHECK(s.behavior_prob > 0.0);
    }
    CHECK_NOTHROW(validate_trace(t));
  }
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  Rng rng(9);
  PolicyParams p = random_params(rng);
  std::string path = (std::filesystem::temp_directory_path() / "hxb_test.ckpt").string();
  save_checkpoint(path, p, 1234, 3);
  Checkpoint loaded = load_checkpoint(path);
  CHECK(loaded.seed == 1234);
  CHECK(loaded.round == 3);
  REQUIRE(loaded.params.dim() == p.dim());
  CHECK(std::memcmp(loaded.params.weights.data(), p.weights.data(),
                    sizeof(double) * static_cast<size_t>(p.dim())) == 0);
  std::filesystem::remove(path);
}
