#include "hexbandit/world.hpp"

#include <algorithm>
#include <stdexcept>

#include "hexbandit/rng.hpp"

namespace hexbandit {

bool is_valid_set(const std::vector<Card>& cards) {
  if (cards.size() != 3) return false;
  return can_form_valid_set(cards);
}

bool can_form_valid_set(const std::vector<Card>& selected) {
  if (selected.size() > 3) return false;
  for (size_t i = 0; i < selected.size(); ++i)
    for (size_t j = i + 1; j < selected.size(); ++j) {
      if (selected[i].color == selected[j].color) return false;
      if (selected[i].shape == selected[j].shape) return false;
      if (selected[i].count == selected[j].count) return false;
    }
  return true;
}

bool WorldState::in_bounds(AxialCoord c) const {
  OffsetCoord o = axial_to_offset(c);
  return o.col >= 0 && o.col < config.grid_edge && o.row >= 0 && o.row < config.grid_edge;
}

const Card* WorldState::card_at(AxialCoord c) const {
  for (const Card& card : cards)
    if (card.position == c) return &card;
  return nullptr;
}

std::vector<Card> WorldState::selected_cards() const {
  std::vector<Card> out;
  for (const Card& c : cards)
    if (c.selected) out.push_back(c);
  return out;
}

bool is_executable(const WorldState& s, Action a) {
  switch (a) {
    case Action::Left:
    case Action::Right:
    case Action::Stop:
      return true;
    case Action::Forward:
    case Action::Backward: {
      AxialCoord target = hexbandit::step(s.follower, a).position;
      return s.in_bounds(target) && !s.is_obstacle(target);
    }
  }
  return false;
}

std::vector<Action> executable_actions(const WorldState& s) {
  std::vector<Action> out;
  for (Action a : kAllActions)
    if (is_executable(s, a)) out.push_back(a);
  return out;
}

namespace {

AxialCoord random_free_cell(const WorldState& s, uint64_t& rng_state) {
  // Deterministic respawn placement from the state's embedded stream.
  for (int attempt = 0; attempt < 10000; ++attempt) {
    uint64_t a = mix_u64(rng_state++);
    uint64_t b = mix_u64(rng_state++);
    int col = static_cast<int>(a % static_cast<uint64_t>(s.config.grid_edge));
    int row = static_cast<int>(b % static_cast<uint64_t>(s.config.grid_edge));
    AxialCoord c = offset_to_axial({col, row});
    if (s.is_obstacle(c)) continue;
    if (s.card_at(c)) continue;
    if (c == s.follower.position || c == s.leader.position) continue;
    return c;
  }
  throw std::runtime_error("no free cell for card respawn");
}

}  // namespace

StepResult apply_action(const WorldState& s, Action a) {
  if (!is_executable(s, a)) {
    AxialCoord target = hexbandit::step(s.follower, a).position;
    std::string why = !s.in_bounds(target) ? "out of bounds" : "obstacle";
    throw std::invalid_argument(std::string("inexecutable action ") + action_name(a) +
                                " at (" + std::to_string(s.follower.position.q) + "," +
                                std::to_string(s.follower.position.r) + "): " + why);
  }

  StepResult res{s, std::nullopt, false, false};
  WorldState& next = res.state;
  next.steps_taken += 1;
  next.clock += s.config.action_duration;

  if (a == Action::Stop) {
    next.instruction_complete = true;
    return res;
  }

  Pose moved = hexbandit::step(s.follower, a);
  bool entered_new_cell = moved.position != s.follower.position;
  next.follower = moved;

  if (entered_new_cell) {
    for (Card& card : next.cards) {
      if (card.position == moved.position) {
        card.selected = !card.selected;
        res.toggle = ToggleEvent{card.id, card.position, card.selected};
        break;
      }
    }
  }

  if (res.toggle) {
    std::vector<Card> selected = next.selected_cards();
    if (is_valid_set(selected)) {
      // Completed set: clear those cards and respawn three fresh ones.
      res.set_completed = true;
      next.sets_completed += 1;
      std::erase_if(next.cards, [](const Card& c) { return c.selected; });
      for (int i = 0; i < 3; ++i) {
        Card fresh;
        fresh.id = next.next_card_id++;
        fresh.position = random_free_cell(next, next.respawn_rng);
        fresh.color = static_cast<int>(mix_u64(next.respawn_rng++) % 6);
        fresh.shape = static_cast<int>(mix_u64(next.respawn_rng++) % 6);
        fresh.count = 1 + static_cast<int>(mix_u64(next.respawn_rng++) % 3);
        next.cards.push_back(fresh);
      }
    } else {
      res.invalid_set_after = !can_form_valid_set(selected);
    }
  }
  return res;
}

bool Observation::in_bounds(AxialCoord c) const {
  OffsetCoord o = axial_to_offset(c);
  return o.col >= 0 && o.col < grid_edge && o.row >= 0 && o.row < grid_edge;
}

bool Observation::is_visible(AxialCoord c) const {
  if (hex_distance(c, follower.position) > visibility_radius) return false;
  // A radius of 2*grid_edge or more is the full-observability configuration:
  // the whole board is in range, so the cone no longer applies.
  if (visibility_radius >= 2 * grid_edge) return true;
  return in_forward_cone(to_agent_frame(c, follower));
}

const KnownCard* Observation::known_card_at(AxialCoord c) const {
  auto it = std::lower_bound(
      cards.begin(), cards.end(), c,
      [](const KnownCard& k, const AxialCoord& pos) { return k.card.position < pos; });
  if (it != cards.end() && it->card.position == c) return &*it;
  return nullptr;
}

CellView Observation::cell(AxialCoord c) const {
  CellView v;
  v.obstacle = obstacles->count(c) > 0;
  v.visible = is_visible(c);
  if (const KnownCard* k = known_card_at(c)) {
    v.card = k->card;
    v.last_seen = k->last_seen;
  } else {
    v.last_seen = v.visible ? step : -1;
  }
  return v;
}

Observation initial_observation(const WorldState& s) {
  Observation empty;
  empty.grid_edge = s.config.grid_edge;
  empty.visibility_radius = s.config.visibility_radius;
  empty.obstacles = s.obstacles;
  empty.follower = s.follower;
  empty.step = -1;
  return observe(s, empty);
}

Observation observe(const WorldState& s, const Observation& memory) {
  Observation out;
  out.grid_edge = s.config.grid_edge;
  out.visibility_radius = s.config.visibility_radius;
  out.obstacles = s.obstacles;
  out.follower = s.follower;
  out.step = s.steps_taken;
  out.instruction_complete = s.instruction_complete;
  out.trajectory = memory.trajectory;
  if (out.trajectory.empty() || out.trajectory.back() != s.follower.position)
    out.trajectory.push_back(s.follower.position);

  // Carry over stale snapshots, then refresh everything inside the cone.
  for (const KnownCard& k : memory.cards) {
    if (out.is_visible(k.card.position)) continue;
    out.cards.push_back({k.card, k.last_seen, false});
  }
  for (const Card& card : s.cards) {
    if (!out.is_visible(card.position)) continue;
    out.cards.push_back({card, s.steps_taken, true});
  }
  std::sort(out.cards.begin(), out.cards.end(),
            [](const KnownCard& a, const KnownCard& b) {
              return a.card.position < b.card.position;
            });
  return out;
}

std::vector<Action> executable_actions(const Observation& o) {
  std::vector<Action> out;
  for (Action a : kAllActions) {
    if (a == Action::Forward || a == Action::Backward) {
      AxialCoord target = hexbandit::step(o.follower, a).position;
      if (!o.in_bounds(target) || o.obstacles->count(target) > 0) continue;
    }
    out.push_back(a);
  }
  return out;
}

}  // namespace hexbandit
