#include "hexbandit/simleader.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace hexbandit {

int state_index(int grid_edge, AxialCoord pos, int heading) {
  OffsetCoord o = axial_to_offset(pos);
  return (o.col * grid_edge + o.row) * 6 + heading;
}

std::vector<int> goal_distances(int grid_edge, const std::set<AxialCoord>& obstacles,
                                const std::set<AxialCoord>& no_entry, AxialCoord goal) {
  std::vector<int> dist(static_cast<size_t>(grid_edge) * grid_edge * 6, kUnreachable);
  auto in_bounds = [&](AxialCoord c) {
    OffsetCoord o = axial_to_offset(c);
    return o.col >= 0 && o.col < grid_edge && o.row >= 0 && o.row < grid_edge;
  };
  auto standable = [&](AxialCoord c) { return in_bounds(c) && !obstacles.count(c); };
  auto enterable = [&](AxialCoord c) {
    return standable(c) && (c == goal || !no_entry.count(c));
  };
  if (!standable(goal)) return dist;

  // Reverse BFS from all goal headings. Expanding (p,h): turning in place is
  // always reversible; movement predecessors exist only if p itself can be
  // entered (we never plan a path through a no-entry cell).
  std::deque<std::pair<AxialCoord, int>> queue;
  for (int h = 0; h < 6; ++h) {
    dist[state_index(grid_edge, goal, h)] = 0;
    queue.emplace_back(goal, h);
  }
  while (!queue.empty()) {
    auto [pos, h] = queue.front();
    queue.pop_front();
    int d = dist[state_index(grid_edge, pos, h)];
    auto relax = [&](AxialCoord p, int hh) {
      int& cell = dist[state_index(grid_edge, p, hh)];
      if (cell <= d + 1) return;
      cell = d + 1;
      queue.emplace_back(p, hh);
    };
    for (int turn : {-1, 1}) relax(pos, ((h + turn) % 6 + 6) % 6);
    if (enterable(pos)) {
      AxialCoord ahead = pos + kHexDirections[h];   // predecessor moved BACKWARD
      AxialCoord behind = pos - kHexDirections[h];  // predecessor moved FORWARD
      if (standable(behind)) relax(behind, h);
      if (standable(ahead)) relax(ahead, h);
    }
  }
  return dist;
}

namespace {

std::set<AxialCoord> card_cells_except(const WorldState& s, AxialCoord keep) {
  std::set<AxialCoord> out;
  for (const Card& c : s.cards)
    if (c.position != keep) out.insert(c.position);
  return out;
}

// Shortest-path reconstruction: repeatedly take the first action (fixed
// order) that decreases the distance field. A distance decrease alone is not
// enough: a no-entry cell can be closer to the goal than its neighbors while
// still being forbidden to enter, so the move target is checked too.
std::optional<std::vector<Action>> reconstruct_path(const std::vector<int>& dist,
                                                    int grid_edge,
                                                    const std::set<AxialCoord>& no_entry,
                                                    Pose start, AxialCoord goal,
                                                    int max_len) {
  std::vector<Action> path;
  Pose cur = start;
  while (cur.position != goal) {
    int d = dist[state_index(grid_edge, cur.position, cur.heading.dir)];
    if (d >= kUnreachable || static_cast<int>(path.size()) >= max_len) return std::nullopt;
    bool advanced = false;
    for (Action a : {Action::Forward, Action::Backward, Action::Left, Action::Right}) {
      Pose next = step(cur, a);
      OffsetCoord o = axial_to_offset(next.position);
      if (o.col < 0 || o.col >= grid_edge || o.row < 0 || o.row >= grid_edge) continue;
      if (next.position != cur.position && next.position != goal &&
          no_entry.count(next.position))
        continue;
      if (dist[state_index(grid_edge, next.position, next.heading.dir)] == d - 1) {
        path.push_back(a);
        cur = next;
        advanced = true;
        break;
      }
    }
    if (!advanced) return std::nullopt;
  }
  return path;
}

std::string descriptor_phrase(const Card& card, Rng& rng) {
  double level = rng.next_double();
  const std::string shape = card.count > 1 ? kShapePlurals[card.shape] : kShapeWords[card.shape];
  if (level < 0.70)
    return std::string(kCountWords[card.count - 1]) + " " + kColorWords[card.color] + " " + shape;
  if (level < 0.90) return std::string(kColorWords[card.color]) + " " + shape;
  return shape;
}

const std::vector<std::string> kVerbs = {"get",     "grab",    "select", "take",
                                         "collect", "go to",   "walk to", "head to",
                                         "move to", "pick up"};

std::string spatial_phrase(AxialCoord rel, Rng& rng) {
  int sector = direction_sector(rel);
  std::vector<std::string> options;
  switch (sector) {
    case 0: options = {"ahead of you", "in front of you", "straight ahead"}; break;
    case 1:
    case 2: options = {"on your right", "to your right"}; break;
    case 3: options = {"behind you", "back behind you"}; break;
    case 4:
    case 5: options = {"on your left", "to your left"}; break;
    default: return "";
  }
  return options[rng.next_below(options.size())];
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    if (ch == ' ') {
      if (!cur.empty()) tokens.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) tokens.push_back(cur);
  return tokens;
}

std::vector<std::string> build_instruction(const WorldState& state,
                                           const std::vector<const Card*>& targets,
                                           Rng& rng) {
  std::string text = kVerbs[rng.next_below(kVerbs.size())] + " the " +
                     descriptor_phrase(*targets[0], rng);
  AxialCoord rel0 = to_agent_frame(targets[0]->position, state.follower);
  if (rng.bernoulli(0.5)) {
    std::string sp = spatial_phrase(rel0, rng);
    if (!sp.empty()) text += " " + sp;
  }
  for (size_t i = 1; i < targets.size(); ++i) {
    std::string joiner = rng.bernoulli(0.5) ? " then " : " and then ";
    std::string verb2 =
        rng.bernoulli(0.4) ? kVerbs[rng.next_below(kVerbs.size())] + " " : std::string();
    text += joiner + verb2 + "the " + descriptor_phrase(*targets[i], rng);
  }
  return tokenize(text);
}

}  // namespace

std::vector<WorldState> replay_states(const Scenario& scenario) {
  std::vector<WorldState> states{scenario.state};
  std::vector<ToggleEvent> toggles;
  for (Action a : scenario.plan.optimal_actions) {
    StepResult res = apply_action(states.back(), a);
    if (res.toggle) toggles.push_back(*res.toggle);
    states.push_back(res.state);
  }
  const Plan& plan = scenario.plan;
  if (toggles.size() != plan.targets.size())
    throw std::runtime_error("plan replay toggled " + std::to_string(toggles.size()) +
                             " cards, expected " + std::to_string(plan.targets.size()));
  for (size_t i = 0; i < toggles.size(); ++i)
    if (toggles[i].card_id != plan.targets[i].card_id)
      throw std::runtime_error("plan replay toggled an unplanned card");
  if (states.back().follower.position != plan.stop_position)
    throw std::runtime_error("plan replay did not reach the stop position");
  if (plan.optimal_actions.empty() || plan.optimal_actions.back() != Action::Stop)
    throw std::runtime_error("plan does not end with STOP");
  return states;
}

Scenario generate_scenario(uint64_t seed, const ScenarioConfig& config) {
  Rng rng(seed);
  const int l = config.world.grid_edge;

  for (int layout_attempt = 0; layout_attempt < 64; ++layout_attempt) {
    // Board layout.
    std::vector<AxialCoord> cells;
    cells.reserve(static_cast<size_t>(l) * l);
    for (int col = 0; col < l; ++col)
      for (int row = 0; row < l; ++row) cells.push_back(offset_to_axial({col, row}));
    rng.shuffle(cells);

    size_t cursor = 0;
    auto obstacles = std::make_shared<std::set<AxialCoord>>();
    for (int i = 0; i < config.world.obstacle_count; ++i)
      obstacles->insert(cells[cursor++]);

    WorldState state;
    state.config = config.world;
    state.obstacles = obstacles;
    state.follower = {cells[cursor++], Heading{static_cast<int>(rng.next_below(6))}};
    state.leader = {cells[cursor++], Heading{static_cast<int>(rng.next_below(6))}};
    state.respawn_rng = mix_u64(seed ^ 0x5eedcafeULL);

    for (int i = 0; i < config.world.card_count; ++i) {
      Card card;
      card.id = state.next_card_id++;
      card.position = cells[cursor++];
      card.color = static_cast<int>(rng.next_below(6));
      card.shape = static_cast<int>(rng.next_below(6));
      card.count = 1 + static_cast<int>(rng.next_below(3));
      state.cards.push_back(card);
    }

    // The leader may have selected one card already as part of set building.
    std::vector<Card*> preselected;
    if (rng.bernoulli(config.preselect_prob)) {
      Card& pick = state.cards[rng.next_below(state.cards.size())];
      pick.selected = true;
      preselected.push_back(&pick);
    }

    for (int target_attempt = 0; target_attempt < 32; ++target_attempt) {
      int most = std::max(1, std::min(config.max_targets, 3 - static_cast<int>(preselected.size())));
      int want = 1 + static_cast<int>(rng.next_below(static_cast<uint64_t>(most)));

      // Greedy nearest-first target choice, keeping the selection compatible
      // with a valid set and every leg reasonably short.
      std::vector<const Card*> targets;
      std::vector<Card> selection;
      for (Card* p : preselected) selection.push_back(*p);
      AxialCoord ref = state.follower.position;
      for (int k = 0; k < want; ++k) {
        std::vector<const Card*> candidates;
        for (const Card& c : state.cards) {
          if (c.selected) continue;
          if (std::any_of(targets.begin(), targets.end(),
                          [&](const Card* t) { return t->id == c.id; }))
            continue;
          int d = hex_distance(c.position, ref);
          if (d < 1 || d > 8) continue;
          std::vector<Card> trial = selection;
          trial.push_back(c);
          if (!can_form_valid_set(trial)) continue;
          candidates.push_back(&c);
        }
        if (candidates.empty()) break;
        std::sort(candidates.begin(), candidates.end(),
                  [&](const Card* a, const Card* b) {
                    int da = hex_distance(a->position, ref), db = hex_distance(b->position, ref);
                    return da != db ? da < db : a->id < b->id;
                  });
        // Prefer close targets but keep some variety.
        size_t pick = std::min(candidates.size() - 1, rng.next_below(3));
        targets.push_back(candidates[pick]);
        selection.push_back(*candidates[pick]);
        ref = targets.back()->position;
      }
      if (targets.empty()) continue;

      // Plan legs with BFS, treating all other card cells as no-entry.
      Plan plan;
      plan.waypoints.push_back(state.follower.position);
      Pose cur = state.follower;
      bool ok = true;
      int budget = config.max_plan_actions - 1;  // reserve STOP
      for (const Card* t : targets) {
        std::set<AxialCoord> no_entry = card_cells_except(state, t->position);
        auto dist = goal_distances(l, *obstacles, no_entry, t->position);
        auto leg = reconstruct_path(dist, l, no_entry, cur, t->position, budget);
        if (!leg) {
          ok = false;
          break;
        }
        for (Action a : *leg) {
          cur = step(cur, a);
          plan.optimal_actions.push_back(a);
          plan.waypoints.push_back(cur.position);
        }
        budget -= static_cast<int>(leg->size());
        plan.targets.push_back({t->id, t->position});
      }
      if (!ok) continue;
      plan.optimal_actions.push_back(Action::Stop);
      plan.stop_position = cur.position;

      Scenario scenario;
      scenario.seed = seed;
      scenario.state = state;
      scenario.plan = plan;
      scenario.instruction = build_instruction(state, targets, rng);
      replay_states(scenario);  // construction check
      return scenario;
    }
  }
  throw std::runtime_error("generate_scenario: no feasible plan for seed " +
                           std::to_string(seed));
}

LeaderOracle::LeaderOracle(const Plan& plan, const OracleConfig& config, uint64_t seed)
    : plan_(plan), config_(config), rng_(seed), toggle_parity_(plan.targets.size(), 0) {}

int LeaderOracle::targets_done() const {
  int done = 0;
  for (size_t i = 0; i < toggle_parity_.size(); ++i)
    if (toggle_parity_[i] % 2 == 1)
      done = static_cast<int>(i) + 1;
    else
      break;
  return done;
}

const std::vector<int>& LeaderOracle::distances_to(const WorldState& s, AxialCoord goal) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const Card& c : s.cards) {
    int key[2] = {c.position.q, c.position.r};
    h = fnv1a64(key, sizeof key, h);
  }
  if (dist_valid_ && goal == dist_goal_ && h == dist_board_hash_) return dist_;
  dist_ = goal_distances(s.config.grid_edge, *s.obstacles, card_cells_except(s, goal), goal);
  dist_goal_ = goal;
  dist_board_hash_ = h;
  dist_valid_ = true;
  return dist_;
}

int LeaderOracle::grade_action(const WorldState& before, Action action,
                               const StepResult& after) {
  int done = targets_done();
  const int n_targets = static_cast<int>(plan_.targets.size());
  AxialCoord goal =
      done < n_targets ? plan_.targets[static_cast<size_t>(done)].position : plan_.stop_position;

  if (action == Action::Stop)
    return (done == n_targets && before.follower.position == plan_.stop_position) ? +1 : -1;

  if (done == n_targets && before.follower.position == plan_.stop_position)
    return -1;  // should have stopped

  // Toggling anything other than the current subgoal is never on plan, even
  // when the toggled cell happens to sit closer to the goal.
  if (after.toggle && after.toggle->position != goal) return -1;

  const std::vector<int>& dist = distances_to(before, goal);
  int l = before.config.grid_edge;
  int d_before = dist[state_index(l, before.follower.position, before.follower.heading.dir)];
  int d_after =
      dist[state_index(l, after.state.follower.position, after.state.follower.heading.dir)];
  return d_after == d_before - 1 ? +1 : -1;
}

std::optional<FeedbackSignal> LeaderOracle::emit_feedback(const WorldState& before,
                                                          Action action,
                                                          const StepResult& after,
                                                          double action_start_time) {
  int sign = grade_action(before, action, after);
  last_toggle_was_stray_selection_ = false;
  if (after.toggle) note_toggle(*after.toggle);

  if (!rng_.bernoulli(config_.feedback_prob)) return std::nullopt;
  double delay = rng_.uniform(config_.delay_min, config_.delay_max);
  if (rng_.bernoulli(config_.sign_error_rate)) sign = -sign;
  return FeedbackSignal{sign, action_start_time + delay};
}

void LeaderOracle::note_toggle(const ToggleEvent& t) {
  for (size_t i = 0; i < plan_.targets.size(); ++i) {
    if (plan_.targets[i].card_id == t.card_id) {
      toggle_parity_[i] += 1;
      return;
    }
  }
  if (t.now_selected) {
    stray_selected_ids_.push_back(t.card_id);
    last_toggle_was_stray_selection_ = true;
  } else {
    auto it = std::find(stray_selected_ids_.begin(), stray_selected_ids_.end(), t.card_id);
    if (it != stray_selected_ids_.end())
      stray_selected_ids_.erase(it);  // correcting its own mistake
    else
      last_toggle_was_stray_selection_ = true;  // deselected the leader's card
  }
}

bool LeaderOracle::maybe_reboot(const StepResult& after) const {
  if (after.state.instruction_complete) return false;
  if (last_toggle_was_stray_selection_) return true;
  int best = kUnreachable;
  for (AxialCoord w : plan_.waypoints)
    best = std::min(best, hex_distance(after.state.follower.position, w));
  return best > config_.reboot_deviation;
}

std::vector<CardDescriptor> parse_descriptors(const std::vector<std::string>& tokens) {
  auto find_in = [](const auto& table, const std::string& w) {
    for (size_t i = 0; i < table.size(); ++i)
      if (w == table[i]) return static_cast<int>(i);
    return -1;
  };
  std::vector<CardDescriptor> out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    int shape = find_in(kShapeWords, tokens[i]);
    if (shape < 0) shape = find_in(kShapePlurals, tokens[i]);
    if (shape < 0) continue;
    CardDescriptor d;
    d.shape = shape;
    size_t back = i >= 3 ? i - 3 : 0;
    for (size_t j = back; j < i; ++j) {
      int color = find_in(kColorWords, tokens[j]);
      if (color >= 0) d.color = color;
      int count = find_in(kCountWords, tokens[j]);
      if (count >= 0) d.count = count + 1;
    }
    out.push_back(d);
  }
  return out;
}

bool matches_descriptor(const Card& card, const CardDescriptor& d) {
  if (d.shape >= 0 && card.shape != d.shape) return false;
  if (d.color >= 0 && card.color != d.color) return false;
  if (d.count >= 0 && card.count != d.count) return false;
  return true;
}

}  // namespace hexbandit
