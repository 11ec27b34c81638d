#include "hexbandit/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hexbandit {

using ordered_json = nlohmann::ordered_json;

Variant variant_from_name(const std::string& name) {
  if (name == "RewardProp") return Variant::RewardProp;
  if (name == "SimpleReward") return Variant::SimpleReward;
  if (name == "NoNegative") return Variant::NoNegative;
  if (name == "FewerDemo") return Variant::FewerDemo;
  if (name == "SupOnly") return Variant::SupOnly;
  throw std::invalid_argument("unknown variant: " + name);
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::RewardProp: return "RewardProp";
    case Variant::SimpleReward: return "SimpleReward";
    case Variant::NoNegative: return "NoNegative";
    case Variant::FewerDemo: return "FewerDemo";
    case Variant::SupOnly: return "SupOnly";
  }
  return "?";
}

RewardMode variant_reward_mode(Variant v) {
  switch (v) {
    case Variant::SimpleReward: return RewardMode::Simple;
    case Variant::NoNegative: return RewardMode::NoNegative;
    default: return RewardMode::Propagated;
  }
}

ScenarioConfig Config::scenario_config() const {
  ScenarioConfig sc;
  sc.world.grid_edge = grid_edge;
  sc.world.obstacle_count = obstacle_count;
  sc.world.card_count = card_count;
  sc.world.visibility_radius = visibility_radius;
  sc.world.action_duration = action_duration;
  sc.max_targets = max_targets;
  sc.preselect_prob = preselect_prob;
  sc.max_plan_actions = max_plan_actions;
  return sc;
}

OracleConfig Config::oracle_config() const {
  OracleConfig oc;
  oc.feedback_prob = feedback_prob;
  oc.delay_min = delay_min;
  oc.delay_max = delay_max;
  oc.sign_error_rate = sign_error_rate;
  oc.reboot_deviation = reboot_deviation;
  return oc;
}

RewardConfig Config::reward_config() const {
  RewardConfig rc;
  rc.response_delay = response_delay;
  rc.propagation_window = propagation_window;
  return rc;
}

TrainConfig Config::train_config() const {
  TrainConfig tc;
  tc.learning_rate = learning_rate;
  tc.batch_size = batch_size;
  tc.clip_ceiling = clip_ceiling;
  tc.max_epochs = max_epochs;
  tc.patience = patience;
  tc.adam_beta1 = adam_beta1;
  tc.adam_beta2 = adam_beta2;
  tc.adam_epsilon = adam_epsilon;
  tc.validation_fraction = validation_fraction;
  tc.feature_dim = static_cast<uint32_t>(feature_dim);
  tc.init_scale = init_scale;
  tc.ensemble_size = ensemble_size;
  tc.validation_max_steps = max_steps;
  return tc;
}

namespace {

// One entry per config key keeps load/save/defaults in a single place.
template <typename Fn>
void for_each_config_field(Config& c, Fn&& fn) {
  fn("run_name", c.run_name);
  fn("variant", c.variant);
  fn("seed", c.seed);
  fn("rounds", c.rounds);
  fn("interactions_per_round", c.interactions_per_round);
  fn("demo_scenarios", c.demo_scenarios);
  fn("fewer_demo_fraction", c.fewer_demo_fraction);
  fn("grid_edge", c.grid_edge);
  fn("obstacle_count", c.obstacle_count);
  fn("card_count", c.card_count);
  fn("max_targets", c.max_targets);
  fn("preselect_prob", c.preselect_prob);
  fn("max_plan_actions", c.max_plan_actions);
  fn("visibility_radius", c.visibility_radius);
  fn("action_duration", c.action_duration);
  fn("max_steps", c.max_steps);
  fn("feedback_prob", c.feedback_prob);
  fn("sign_error_rate", c.sign_error_rate);
  fn("delay_min", c.delay_min);
  fn("delay_max", c.delay_max);
  fn("reboot_deviation", c.reboot_deviation);
  fn("response_delay", c.response_delay);
  fn("propagation_window", c.propagation_window);
  fn("feature_dim", c.feature_dim);
  fn("ensemble_size", c.ensemble_size);
  fn("batch_size", c.batch_size);
  fn("learning_rate", c.learning_rate);
  fn("clip_ceiling", c.clip_ceiling);
  fn("adam_beta1", c.adam_beta1);
  fn("adam_beta2", c.adam_beta2);
  fn("adam_epsilon", c.adam_epsilon);
  fn("max_epochs", c.max_epochs);
  fn("patience", c.patience);
  fn("validation_fraction", c.validation_fraction);
  fn("init_scale", c.init_scale);
  fn("stop_tolerance", c.stop_tolerance);
}

}  // namespace

Config config_from_json_text(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("config must be a flat JSON object");
  Config c;
  std::set<std::string> known;
  for_each_config_field(c, [&](const char* key, auto& field) {
    known.insert(key);
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  });
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.count(key)) throw std::invalid_argument("unknown config key: " + key);
  }
  return c;
}

std::string config_to_json_text(const Config& config) {
  ordered_json j = ordered_json::object();
  Config& c = const_cast<Config&>(config);
  for_each_config_field(c, [&](const char* key, auto& field) { j[key] = field; });
  return j.dump(2) + "\n";
}

Config load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return config_from_json_text(ss.str());
}

void save_config(const std::string& path, const Config& config) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write config: " + path);
  f << config_to_json_text(config);
}

namespace {

ordered_json pose_to_json(const Pose& p) {
  return ordered_json{{"q", p.position.q}, {"r", p.position.r}, {"h", p.heading.dir}};
}

Pose pose_from_json(const ordered_json& j) {
  return {{j.at("q").get<int>(), j.at("r").get<int>()}, Heading{j.at("h").get<int>()}};
}

ordered_json observation_to_json(const Observation& o) {
  ordered_json cards = ordered_json::array();
  for (const KnownCard& k : o.cards) {
    cards.push_back(ordered_json{{"id", k.card.id},
                                 {"q", k.card.position.q},
                                 {"r", k.card.position.r},
                                 {"color", k.card.color},
                                 {"shape", k.card.shape},
                                 {"count", k.card.count},
                                 {"selected", k.card.selected},
                                 {"last_seen", k.last_seen},
                                 {"visible", k.visible}});
  }
  ordered_json trajectory = ordered_json::array();
  for (AxialCoord c : o.trajectory) trajectory.push_back(ordered_json::array({c.q, c.r}));
  return ordered_json{{"pose", pose_to_json(o.follower)},
                      {"step", o.step},
                      {"complete", o.instruction_complete},
                      {"cards", cards},
                      {"trajectory", trajectory}};
}

Observation observation_from_json(const ordered_json& j, const Scenario& scenario) {
  Observation o;
  o.grid_edge = scenario.state.config.grid_edge;
  o.visibility_radius = scenario.state.config.visibility_radius;
  o.obstacles = scenario.state.obstacles;
  o.follower = pose_from_json(j.at("pose"));
  o.step = j.at("step").get<int>();
  o.instruction_complete = j.at("complete").get<bool>();
  for (const auto& cj : j.at("cards")) {
    KnownCard k;
    k.card.id = cj.at("id").get<int>();
    k.card.position = {cj.at("q").get<int>(), cj.at("r").get<int>()};
    k.card.color = cj.at("color").get<int>();
    k.card.shape = cj.at("shape").get<int>();
    k.card.count = cj.at("count").get<int>();
    k.card.selected = cj.at("selected").get<bool>();
    k.last_seen = cj.at("last_seen").get<int>();
    k.visible = cj.at("visible").get<bool>();
    o.cards.push_back(k);
  }
  for (const auto& tj : j.at("trajectory"))
    o.trajectory.push_back({tj.at(0).get<int>(), tj.at(1).get<int>()});
  return o;
}

}  // namespace

std::string trace_to_json(const Trace& t) {
  ordered_json steps = ordered_json::array();
  for (const TraceStep& s : t.steps) {
    ordered_json sj{{"action", action_name(s.action)},
                    {"wall_time", s.wall_time},
                    {"behavior_prob", s.behavior_prob}};
    if (s.toggle) {
      sj["toggle"] = ordered_json{{"card_id", s.toggle->card_id},
                                  {"q", s.toggle->position.q},
                                  {"r", s.toggle->position.r},
                                  {"selected", s.toggle->now_selected}};
    } else {
      sj["toggle"] = nullptr;
    }
    sj["invalid_set_after"] = s.invalid_set_after;
    sj["observation"] = observation_to_json(s.observation);
    steps.push_back(sj);
  }
  ordered_json feedback = ordered_json::array();
  for (const FeedbackSignal& f : t.feedback)
    feedback.push_back(ordered_json{{"sign", f.sign}, {"t", f.wall_time}});

  ordered_json j{{"id", t.id},
                 {"scenario_seed", t.scenario_seed},
                 {"round", t.round},
                 {"instruction", t.instruction},
                 {"rebooted", t.rebooted},
                 {"final_pose", pose_to_json(t.final_pose)},
                 {"steps", steps},
                 {"feedback", feedback}};
  return j.dump();
}

Trace trace_from_json(const std::string& line, const Scenario& scenario) {
  ordered_json j = ordered_json::parse(line);
  Trace t;
  t.id = j.at("id").get<std::string>();
  t.scenario_seed = j.at("scenario_seed").get<uint64_t>();
  t.round = j.at("round").get<int>();
  t.instruction = j.at("instruction").get<std::vector<std::string>>();
  t.rebooted = j.at("rebooted").get<bool>();
  t.final_pose = pose_from_json(j.at("final_pose"));
  for (const auto& sj : j.at("steps")) {
    TraceStep s;
    s.action = action_from_name(sj.at("action").get<std::string>());
    s.wall_time = sj.at("wall_time").get<double>();
    s.behavior_prob = sj.at("behavior_prob").get<double>();
    if (!sj.at("toggle").is_null()) {
      const auto& tj = sj.at("toggle");
      s.toggle = ToggleEvent{tj.at("card_id").get<int>(),
                             {tj.at("q").get<int>(), tj.at("r").get<int>()},
                             tj.at("selected").get<bool>()};
    }
    s.invalid_set_after = sj.at("invalid_set_after").get<bool>();
    s.observation = observation_from_json(sj.at("observation"), scenario);
    t.steps.push_back(std::move(s));
  }
  for (const auto& fj : j.at("feedback"))
    t.feedback.push_back({fj.at("sign").get<int>(), fj.at("t").get<double>()});
  return t;
}

void save_traces(const std::string& path, const std::vector<Trace>& traces) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write traces: " + path);
  for (const Trace& t : traces) f << trace_to_json(t) << "\n";
}

std::vector<Trace> load_traces(const std::string& path, const ScenarioConfig& config) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read traces: " + path);
  std::vector<Trace> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    uint64_t seed = ordered_json::parse(line).at("scenario_seed").get<uint64_t>();
    Scenario scenario = generate_scenario(seed, config);
    out.push_back(trace_from_json(line, scenario));
  }
  return out;
}

std::string observation_digest(const Observation& o) {
  uint64_t h = fnv1a64(observation_to_json(o).dump());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string example_to_json(const RewardedExample& ex) {
  std::string instruction;
  for (size_t i = 0; i < ex.instruction.size(); ++i) {
    if (i) instruction += " ";
    instruction += ex.instruction[i];
  }
  ordered_json j{{"trace_id", ex.trace_id},
                 {"step", ex.step},
                 {"instruction", instruction},
                 {"observation", observation_digest(ex.observation)},
                 {"action", action_name(ex.action)},
                 {"reward", ex.reward},
                 {"behavior_prob", ex.behavior_prob},
                 {"round", ex.round}};
  return j.dump();
}

void save_dataset(const std::string& path, const std::vector<RewardedExample>& examples) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write dataset: " + path);
  for (const RewardedExample& ex : examples) f << example_to_json(ex) << "\n";
}

std::vector<RewardedExample> load_dataset(const std::string& path,
                                          const std::vector<Trace>& traces) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read dataset: " + path);
  std::map<std::string, const Trace*> by_id;
  for (const Trace& t : traces) by_id[t.id] = &t;

  std::vector<RewardedExample> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    ordered_json j = ordered_json::parse(line);
    auto it = by_id.find(j.at("trace_id").get<std::string>());
    if (it == by_id.end())
      throw std::runtime_error("dataset row references unknown trace " +
                               j.at("trace_id").get<std::string>());
    const Trace& t = *it->second;
    int step = j.at("step").get<int>();
    if (step < 0 || step >= static_cast<int>(t.steps.size()))
      throw std::runtime_error("dataset row step out of range for trace " + t.id);
    RewardedExample ex;
    ex.trace_id = t.id;
    ex.step = step;
    ex.instruction = t.instruction;
    ex.observation = t.steps[static_cast<size_t>(step)].observation;
    ex.action = action_from_name(j.at("action").get<std::string>());
    ex.reward = j.at("reward").get<int>();
    ex.behavior_prob = j.at("behavior_prob").get<double>();
    ex.round = j.at("round").get<int>();
    if (observation_digest(ex.observation) != j.at("observation").get<std::string>())
      throw std::runtime_error("dataset row observation digest mismatch for trace " + t.id);
    out.push_back(std::move(ex));
  }
  return out;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
  out << "round,variant,metric,value\n";
  char buf[64];
  for (const MetricRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f", r.value);
    out << r.round << "," << r.variant << "," << r.metric << "," << buf << "\n";
  }
}

std::vector<MetricRow> read_metrics_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read metrics: " + path);
  std::vector<MetricRow> rows;
  std::string line;
  bool header = true;
  while (std::getline(f, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    MetricRow row;
    std::getline(ss, field, ',');
    row.round = std::stoi(field);
    std::getline(ss, row.variant, ',');
    std::getline(ss, row.metric, ',');
    std::getline(ss, field, ',');
    row.value = std::stod(field);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace hexbandit
