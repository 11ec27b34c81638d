#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hexbandit/hexgeom.hpp"

// CerealBar-lite environment: a hexagonal board with obstacles and cards, a
// follower the policy controls, and a partial egocentric observation whose
// card information can go stale outside the view cone.

namespace hexbandit {

struct Card {
  int id = 0;
  AxialCoord position;
  int color = 0;  // 0..5
  int shape = 0;  // 0..5
  int count = 1;  // 1..3
  bool selected = false;
  bool operator==(const Card&) const = default;
};

// Card property vocabulary, shared by the instruction grammar and the
// featurizer's descriptor matching.
inline constexpr std::array<const char*, 6> kColorWords = {"red",  "orange", "yellow",
                                                           "green", "blue",   "purple"};
inline constexpr std::array<const char*, 6> kShapeWords = {"heart", "star",  "diamond",
                                                           "club",  "cross", "triangle"};
inline constexpr std::array<const char*, 6> kShapePlurals = {"hearts", "stars",  "diamonds",
                                                             "clubs",  "crosses", "triangles"};
inline constexpr std::array<const char*, 3> kCountWords = {"one", "two", "three"};

// True iff exactly three cards whose colors, shapes and counts are each
// pairwise distinct.
bool is_valid_set(const std::vector<Card>& cards);

// True iff the currently selected cards could still become a valid set:
// at most three of them and no two sharing any property.
bool can_form_valid_set(const std::vector<Card>& selected);

struct WorldConfig {
  int grid_edge = 25;
  int obstacle_count = 40;
  int card_count = 21;
  int visibility_radius = 6;
  double action_duration = 0.5;  // simulated seconds per action
};

struct ToggleEvent {
  int card_id = 0;
  AxialCoord position;
  bool now_selected = false;
  bool operator==(const ToggleEvent&) const = default;
};

// Value type; apply_action returns the successor.
struct WorldState {
  WorldConfig config;
  std::shared_ptr<const std::set<AxialCoord>> obstacles;
  std::vector<Card> cards;
  Pose follower;
  Pose leader;
  int steps_taken = 0;
  double clock = 0.0;
  bool instruction_complete = false;
  int sets_completed = 0;
  int next_card_id = 0;
  uint64_t respawn_rng = 0;  // splitmix64 state for card respawns

  bool in_bounds(AxialCoord c) const;
  bool is_obstacle(AxialCoord c) const { return obstacles->count(c) > 0; }
  const Card* card_at(AxialCoord c) const;
  std::vector<Card> selected_cards() const;
};

// Result of one transition, with the card-interaction bookkeeping the reward
// heuristics need.
struct StepResult {
  WorldState state;
  std::optional<ToggleEvent> toggle;
  bool invalid_set_after = false;  // this step's toggle left the selection unmatchable
  bool set_completed = false;
};

std::vector<Action> executable_actions(const WorldState& s);
bool is_executable(const WorldState& s, Action a);

// Applies an executable action. Entering a card cell toggles that card;
// completing a valid set clears it and respawns three cards. STOP leaves the
// board unchanged and marks the instruction complete. Throws
// std::invalid_argument with a description if `a` is not executable.
StepResult apply_action(const WorldState& s, Action a);

// A card the follower knows about, possibly from an earlier step.
struct KnownCard {
  Card card;
  int last_seen = -1;
  bool visible = false;
  bool operator==(const KnownCard&) const = default;
};

// One cell of an observation, as exposed by Observation::cell.
struct CellView {
  bool obstacle = false;
  std::optional<Card> card;
  int last_seen = -1;
  bool visible = false;
};

// Partial, possibly stale egocentric view. Terrain is static and known from
// the start; card snapshots refresh only inside the view cone. Visibility of
// a cell is a pure function of the follower pose, so only card knowledge is
// stored.
struct Observation {
  int grid_edge = 25;
  int visibility_radius = 6;
  std::shared_ptr<const std::set<AxialCoord>> obstacles;
  Pose follower;
  int step = 0;
  bool instruction_complete = false;
  std::vector<KnownCard> cards;        // sorted by position (q, r)
  std::vector<AxialCoord> trajectory;  // cells entered so far, in order

  bool in_bounds(AxialCoord c) const;
  bool is_visible(AxialCoord c) const;
  CellView cell(AxialCoord c) const;
  const KnownCard* known_card_at(AxialCoord c) const;
};

// Refreshes `memory` with everything currently inside the follower's view
// cone (radius from config, half-angle one heading step each side). Cells
// outside the cone carry their previous snapshot unchanged.
Observation observe(const WorldState& s, const Observation& memory);

// Observation with no prior memory (episode start, before any action).
Observation initial_observation(const WorldState& s);

// Executable actions derivable from an observation alone (terrain is fully
// known, cards never block movement).
std::vector<Action> executable_actions(const Observation& o);

}  // namespace hexbandit
