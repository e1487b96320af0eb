#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace svosim {

// Thrown for malformed configs, maps, and illegal operation arguments.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a file fails a hash/length consistency check.
struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Pos {
  int row = 0;
  int col = 0;

  friend bool operator==(const Pos&, const Pos&) = default;
};

inline double euclidean(const Pos& a, const Pos& b) {
  const double dr = a.row - b.row;
  const double dc = a.col - b.col;
  return std::sqrt(dr * dr + dc * dc);
}

inline int manhattan(const Pos& a, const Pos& b) {
  return std::abs(a.row - b.row) + std::abs(a.col - b.col);
}

enum class Orientation : uint8_t { North = 0, East = 1, South = 2, West = 3 };

// Row/col delta for one step in the facing direction.
inline Pos orientation_delta(Orientation o) {
  switch (o) {
    case Orientation::North: return {-1, 0};
    case Orientation::East: return {0, 1};
    case Orientation::South: return {1, 0};
    case Orientation::West: return {0, -1};
  }
  return {0, 0};
}

inline Orientation rotate_cw(Orientation o) {
  return static_cast<Orientation>((static_cast<int>(o) + 1) % 4);
}

inline Orientation rotate_ccw(Orientation o) {
  return static_cast<Orientation>((static_cast<int>(o) + 3) % 4);
}

inline const char* orientation_name(Orientation o) {
  switch (o) {
    case Orientation::North: return "N";
    case Orientation::East: return "E";
    case Orientation::South: return "S";
    case Orientation::West: return "W";
  }
  return "?";
}

enum class Action : uint8_t {
  MoveForward = 0,
  MoveBackward = 1,
  StrafeLeft = 2,
  StrafeRight = 3,
  RotateLeft = 4,
  RotateRight = 5,
  NoOp = 6,
  FirePunish = 7,
  FireClean = 8,  // Cleanup only
};

inline const char* action_name(Action a) {
  switch (a) {
    case Action::MoveForward: return "forward";
    case Action::MoveBackward: return "backward";
    case Action::StrafeLeft: return "strafe_left";
    case Action::StrafeRight: return "strafe_right";
    case Action::RotateLeft: return "rotate_left";
    case Action::RotateRight: return "rotate_right";
    case Action::NoOp: return "noop";
    case Action::FirePunish: return "punish";
    case Action::FireClean: return "clean";
  }
  return "?";
}

enum class EnvKind : uint8_t { HarvestPatch = 0, Cleanup = 1 };

inline int action_count(EnvKind kind) {
  return kind == EnvKind::HarvestPatch ? 8 : 9;
}

inline const char* env_name(EnvKind kind) {
  return kind == EnvKind::HarvestPatch ? "harvestpatch" : "cleanup";
}

inline EnvKind env_from_name(const std::string& name) {
  if (name == "harvestpatch" || name == "harvest") return EnvKind::HarvestPatch;
  if (name == "cleanup") return EnvKind::Cleanup;
  throw ConfigError("unknown environment id: " + name);
}

// Per-group step rewards / returns, one entry per group member.
using RewardVector = std::vector<double>;

constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double d) { return d * kPi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / kPi; }

// Shortest-double formatting keeps CSV and JSONL output byte-stable.
inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string fmt_double_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace svosim
