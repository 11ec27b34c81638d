#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

// Hexagonal grid primitives. Flat-top hexes, odd-q offset layout for board
// storage, axial coordinates for all geometry. Heading arithmetic is mod 6,
// clockwise, heading 0 pointing "north" (decreasing r).

namespace hexbandit {

struct OffsetCoord {
  int col = 0;
  int row = 0;
  bool operator==(const OffsetCoord&) const = default;
};

struct AxialCoord {
  int q = 0;
  int r = 0;
  bool operator==(const AxialCoord&) const = default;
  auto operator<=>(const AxialCoord&) const = default;
  AxialCoord operator+(const AxialCoord& o) const { return {q + o.q, r + o.r}; }
  AxialCoord operator-(const AxialCoord& o) const { return {q - o.q, r - o.r}; }
};

struct Heading {
  int dir = 0;  // in [0, 6)
  bool operator==(const Heading&) const = default;
  Heading turned(int delta) const { return {((dir + delta) % 6 + 6) % 6}; }
};

struct Pose {
  AxialCoord position;
  Heading heading;
  bool operator==(const Pose&) const = default;
};

enum class Action : int { Forward = 0, Backward = 1, Left = 2, Right = 3, Stop = 4 };
inline constexpr std::array<Action, 5> kAllActions = {
    Action::Forward, Action::Backward, Action::Left, Action::Right, Action::Stop};

inline const char* action_name(Action a) {
  switch (a) {
    case Action::Forward: return "FORWARD";
    case Action::Backward: return "BACKWARD";
    case Action::Left: return "LEFT";
    case Action::Right: return "RIGHT";
    case Action::Stop: return "STOP";
  }
  return "?";
}

inline Action action_from_name(const std::string& s) {
  for (Action a : kAllActions)
    if (s == action_name(a)) return a;
  throw std::invalid_argument("unknown action: " + s);
}

// Neighbor offsets per heading, clockwise starting north.
inline constexpr std::array<AxialCoord, 6> kHexDirections = {
    AxialCoord{0, -1}, AxialCoord{1, -1}, AxialCoord{1, 0},
    AxialCoord{0, 1},  AxialCoord{-1, 1}, AxialCoord{-1, 0}};

inline AxialCoord heading_vector(Heading h) { return kHexDirections[h.dir]; }

// odd-q: odd columns are shifted half a hex down.
inline AxialCoord offset_to_axial(OffsetCoord c) {
  return {c.col, c.row - (c.col - (c.col & 1)) / 2};
}

inline OffsetCoord axial_to_offset(AxialCoord a) {
  return {a.q, a.r + (a.q - (a.q & 1)) / 2};
}

inline int hex_distance(AxialCoord a, AxialCoord b) {
  int dq = a.q - b.q;
  int dr = a.r - b.r;
  return (std::abs(dq) + std::abs(dr) + std::abs(dq + dr)) / 2;
}

// One 60-degree rotation about the origin. Clockwise maps heading k's
// direction vector onto heading k+1's.
inline AxialCoord rotate_cw(AxialCoord a) {
  int x = a.q, z = a.r, y = -x - z;
  return {-z, -y};  // (x,y,z) -> (-z,-x,-y), axial = (x,z)
}

inline AxialCoord rotate_ccw(AxialCoord a) {
  int x = a.q, z = a.r, y = -x - z;
  return {-y, -x};  // (x,y,z) -> (-y,-z,-x)
}

inline AxialCoord rotate_steps(AxialCoord a, int steps) {
  steps = (steps % 6 + 6) % 6;
  for (int i = 0; i < steps; ++i) a = rotate_cw(a);
  return a;
}

// Translates `cell` so the agent sits at the origin and rotates so the agent
// faces heading 0.
inline AxialCoord to_agent_frame(AxialCoord cell, const Pose& pose) {
  AxialCoord rel = cell - pose.position;
  for (int i = 0; i < pose.heading.dir; ++i) rel = rotate_ccw(rel);
  return rel;
}

template <typename T>
std::map<AxialCoord, T> recenter_rotate(const std::map<AxialCoord, T>& cells,
                                        const Pose& pose) {
  std::map<AxialCoord, T> out;
  for (const auto& [c, v] : cells) out[to_agent_frame(c, pose)] = v;
  return out;
}

// True if `rel` (already in the agent frame) lies within 60 degrees of the
// facing direction, boundaries inclusive. Exact integer test: with flat-top
// cartesian coordinates the angle-from-north condition cos(theta) >= 1/2
// reduces to -(2r+q) >= |q|.
inline bool in_forward_cone(AxialCoord rel) {
  int s = -(2 * rel.r + rel.q);
  return s >= std::abs(rel.q);
}

// Sextant of `rel` as seen from the origin: 0..5 for the dominant heading
// (ties broken toward the lower index), -1 for the origin itself.
inline int direction_sector(AxialCoord rel) {
  if (rel == AxialCoord{0, 0}) return -1;
  int x = rel.q, z = rel.r, y = -x - z;
  int best = 0;
  long best_dot = 0;
  for (int k = 0; k < 6; ++k) {
    AxialCoord d = kHexDirections[k];
    int dx = d.q, dz = d.r, dy = -dx - dz;
    long dot = static_cast<long>(x) * dx + static_cast<long>(y) * dy +
               static_cast<long>(z) * dz;
    if (k == 0 || dot > best_dot) {
      best = k;
      best_dot = dot;
    }
  }
  return best;
}

// All cells within hex distance (diameter-1)/2 of the origin.
inline std::vector<AxialCoord> hex_disk_mask(int diameter) {
  if (diameter < 1 || diameter % 2 == 0)
    throw std::invalid_argument("hex_disk_mask: diameter must be odd and >= 1");
  int k = (diameter - 1) / 2;
  std::vector<AxialCoord> cells;
  for (int q = -k; q <= k; ++q)
    for (int r = std::max(-k, -q - k); r <= std::min(k, -q + k); ++r)
      cells.push_back({q, r});
  return cells;
}

// Pose transition. Forward/backward translate along/against the heading,
// left/right turn in place. Bounds and obstacles are the world's concern.
inline Pose step(const Pose& pose, Action action) {
  switch (action) {
    case Action::Forward:
      return {pose.position + heading_vector(pose.heading), pose.heading};
    case Action::Backward:
      return {pose.position - heading_vector(pose.heading), pose.heading};
    case Action::Left:
      return {pose.position, pose.heading.turned(-1)};
    case Action::Right:
      return {pose.position, pose.heading.turned(+1)};
    case Action::Stop:
      return pose;
  }
  throw std::invalid_argument("step: bad action");
}

struct AxialHash {
  size_t operator()(const AxialCoord& a) const {
    return std::hash<long long>()((static_cast<long long>(a.q) << 32) ^
                                  static_cast<unsigned>(a.r));
  }
};

}  // namespace hexbandit
