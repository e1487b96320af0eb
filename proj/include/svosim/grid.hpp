#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "svosim/cleanup.hpp"
#include "svosim/common.hpp"
#include "svosim/harvest.hpp"
#include "svosim/map.hpp"
#include "svosim/rng.hpp"

namespace svosim {

constexpr int kWindow = 15;       // observation window side length
constexpr int kWindowHalf = 7;    // cells visible on each side of the avatar

struct BeamParams {
  int punish_length = 10;
  int clean_length = 3;
  int punish_reward = -50;  // applied to the avatar hit
  int punish_cost = -1;     // applied to the firing avatar
  int apple_reward = 1;
  int punish_timeout = 0;   // steps a punished avatar is frozen (0 = stays active)
};

struct AgentAvatar {
  int agent_id = 0;  // index within the group, 0..n-1
  Pos position;
  Orientation orientation = Orientation::North;
  Action last_action = Action::NoOp;
  int frozen_steps = 0;
};

enum class BeamKind : uint8_t { Punish = 0, Clean = 1 };

struct BeamResult {
  int origin = -1;
  BeamKind kind = BeamKind::Punish;
  std::vector<Pos> hit_cells;
  std::vector<int> hit_agents;
};

// Fixed RGB palette for observation rendering. Out-of-map padding is
// black; avatars are drawn over terrain, the observer in white and
// groupmates in per-index colors.
using Rgb = std::array<uint8_t, 3>;
constexpr Rgb kColorPadding{0, 0, 0};
constexpr Rgb kColorOpen{40, 40, 40};
constexpr Rgb kColorWall{127, 127, 127};
constexpr Rgb kColorApple{0, 255, 0};
constexpr Rgb kColorRiverClean{0, 105, 255};
constexpr Rgb kColorRiverPolluted{120, 60, 20};
constexpr Rgb kColorOrchardEmpty{20, 80, 20};
constexpr Rgb kColorSelf{255, 255, 255};
constexpr std::array<Rgb, 8> kAvatarColors{{{255, 0, 0},
                                            {255, 255, 0},
                                            {255, 0, 255},
                                            {0, 255, 255},
                                            {255, 128, 0},
                                            {128, 0, 255},
                                            {0, 128, 255},
                                            {255, 128, 128}}};

// Egocentric 15x15 RGB window plus the observer's own orientation. The
// window is axis-aligned (it does not rotate with the avatar).
struct Observation {
  std::array<uint8_t, kWindow * kWindow * 3> rgb{};
  Orientation own_orientation = Orientation::North;

  const uint8_t* pixel(int wr, int wc) const { return &rgb[(wr * kWindow + wc) * 3]; }

  bool pixel_is(int wr, int wc, const Rgb& color) const {
    const uint8_t* p = pixel(wr, wc);
    return p[0] == color[0] && p[1] == color[1] && p[2] == color[2];
  }
};

struct EndangeredEvent {
  int agent_id;
  int patch_id;
};

struct StepResult {
  std::vector<int> rewards;               // extrinsic, one per avatar
  std::vector<BeamResult> beams;          // resolved this step, in agent order
  std::vector<EndangeredEvent> endangered_consumed;
  std::vector<int> cleaned_cells;         // per avatar, cells cleaned this step
  int apples_collected = 0;
};

struct WorldConfig {
  EnvKind kind = EnvKind::HarvestPatch;
  int n_agents = 5;
  BeamParams beams;
  HarvestParams harvest;
  CleanupParams cleanup;
};

// The shared gridworld substrate: avatars, movement, beams, and the
// per-environment resource dynamics. One instance per arena; instances
// are independent and own their generator state.
class World {
 public:
  World(MapSpec map, const WorldConfig& config, uint64_t seed)
      : map_(std::move(map)), config_(config), rng_(seed) {
    if (config_.n_agents < 1) throw ConfigError("world: need at least one agent");
    if (static_cast<size_t>(config_.n_agents) > map_.spawn_points.size()) {
      throw ConfigError("world: map has " + std::to_string(map_.spawn_points.size()) +
                        " spawn points, need " + std::to_string(config_.n_agents));
    }
    if (config_.kind == EnvKind::HarvestPatch) {
      if (map_.patch_sites.empty()) throw ConfigError("harvestpatch map has no apple patches");
      patches_ = PatchMap(map_, config_.harvest);
      patches_.spawn_initial(rng_);
    } else {
      if (map_.river_cells.empty()) throw ConfigError("cleanup map has no river cells");
      if (map_.orchard_cells.empty()) throw ConfigError("cleanup map has no orchard cells");
      river_ = RiverState(map_, config_.cleanup);
      orchard_ = OrchardState(map_, config_.cleanup);
      river_.spawn_initial(rng_);
      orchard_.spawn_initial(rng_);
    }
    occupancy_.assign(map_.height * map_.width, -1);
    auto spawn_order = rng_.sample_without_replacement(
        static_cast<int>(map_.spawn_points.size()), config_.n_agents);
    avatars_.resize(config_.n_agents);
    for (int i = 0; i < config_.n_agents; ++i) {
      avatars_[i].agent_id = i;
      avatars_[i].position = map_.spawn_points[spawn_order[i]];
      avatars_[i].orientation = static_cast<Orientation>(rng_.bounded(4));
      occupancy_[map_.index(avatars_[i].position)] = i;
    }
    episode_returns_.assign(config_.n_agents, 0);
  }

  int n_agents() const { return config_.n_agents; }
  EnvKind kind() const { return config_.kind; }
  const MapSpec& map() const { return map_; }
  const AgentAvatar& avatar(int i) const { return avatars_.at(i); }
  int step_index() const { return step_index_; }
  long long episode_return(int i) const { return episode_returns_.at(i); }
  const PatchMap& patch_map() const { return patches_; }
  PatchMap& patch_map() { return patches_; }
  const RiverState& river() const { return river_; }
  const OrchardState& orchard() const { return orchard_; }
  Rng& rng() { return rng_; }

  bool apple_at(const Pos& p) const {
    return config_.kind == EnvKind::HarvestPatch ? patches_.apple_at(p) : orchard_.apple_at(p);
  }

  // Advances the world by one tick: movement (simultaneous, conflicts
  // resolved in a seeded random priority order), apple pickup, beams,
  // then the environment's resource dynamics.
  StepResult step(const std::vector<Action>& joint_action) {
    if (static_cast<int>(joint_action.size()) != config_.n_agents) {
      throw ConfigError("step: joint action has " + std::to_string(joint_action.size()) +
                        " entries, expected " + std::to_string(config_.n_agents));
    }
    const int n_actions = action_count(config_.kind);
    for (Action a : joint_action) {
      if (static_cast<int>(a) >= n_actions) {
        throw ConfigError(std::string("step: action '") + action_name(a) +
                          "' is out of range for " + env_name(config_.kind));
      }
    }

    StepResult result;
    result.rewards.assign(config_.n_agents, 0);
    result.cleaned_cells.assign(config_.n_agents, 0);

    for (auto& av : avatars_) {
      if (av.frozen_steps > 0) av.frozen_steps -= 1;
    }

    // Movement. Sequential application in a fresh random order gives
    // same-target conflicts a seeded winner; losers stay put.
    priority_.resize(config_.n_agents);
    for (int i = 0; i < config_.n_agents; ++i) priority_[i] = i;
    rng_.shuffle(priority_);
    for (int idx : priority_) {
      AgentAvatar& av = avatars_[idx];
      const Action a = joint_action[idx];
      av.last_action = av.frozen_steps > 0 ? Action::NoOp : a;
      if (av.frozen_steps > 0) continue;
      switch (a) {
        case Action::RotateLeft: av.orientation = rotate_ccw(av.orientation); break;
        case Action::RotateRight: av.orientation = rotate_cw(av.orientation); break;
        case Action::MoveForward:
        case Action::MoveBackward:
        case Action::StrafeLeft:
        case Action::StrafeRight: {
          const Pos target = move_target(av.position, av.orientation, a);
          if (map_.walkable(target) && occupancy_[map_.index(target)] < 0) {
            occupancy_[map_.index(av.position)] = -1;
            av.position = target;
            occupancy_[map_.index(target)] = idx;
          }
          break;
        }
        default: break;
      }
    }

    // Apple pickup at the post-movement positions.
    for (int i = 0; i < config_.n_agents; ++i) {
      const Pos p = avatars_[i].position;
      if (config_.kind == EnvKind::HarvestPatch) {
        bool endangered = false;
        int patch_id = -1;
        const int got = patches_.harvest(p, &endangered, &patch_id);
        if (got) {
          result.rewards[i] += config_.beams.apple_reward;
          result.apples_collected += 1;
          if (endangered) result.endangered_consumed.push_back({i, patch_id});
        }
      } else {
        if (orchard_.harvest(p)) {
          result.rewards[i] += config_.beams.apple_reward;
          result.apples_collected += 1;
        }
      }
    }

    // Beams fire after movement, in fixed agent order.
    for (int i = 0; i < config_.n_agents; ++i) {
      if (avatars_[i].frozen_steps > 0) continue;
      const Action a = joint_action[i];
      if (a == Action::FirePunish) {
        result.rewards[i] += config_.beams.punish_cost;
        BeamResult beam = resolve_beam(i, BeamKind::Punish);
        for (int hit : beam.hit_agents) {
          result.rewards[hit] += config_.beams.punish_reward;
          if (config_.beams.punish_timeout > 0) {
            avatars_[hit].frozen_steps = config_.beams.punish_timeout;
          }
        }
        result.beams.push_back(std::move(beam));
      } else if (a == Action::FireClean) {
        BeamResult beam = resolve_beam(i, BeamKind::Clean);
        const int removed = river_.clean(beam.hit_cells);
        result.cleaned_cells[i] += removed;
        result.beams.push_back(std::move(beam));
      }
    }

    // Resource dynamics.
    if (config_.kind == EnvKind::HarvestPatch) {
      patches_.regrow(rng_);
    } else {
      river_.pollute(rng_);
      orchard_.grow(orchard_growth_rate(river_), rng_);
    }

    for (int i = 0; i < config_.n_agents; ++i) episode_returns_[i] += result.rewards[i];
    step_index_ += 1;
    return result;
  }

  // Traces a beam from the cell in front of the avatar along its facing
  // direction. Punish beams stop at the first avatar or wall; clean
  // beams pass through avatars and stop only at walls.
  BeamResult resolve_beam(int origin, BeamKind kind) const {
    if (origin < 0 || origin >= config_.n_agents) {
      throw std::out_of_range("resolve_beam: bad agent id");
    }
    if (kind == BeamKind::Clean && config_.kind != EnvKind::Cleanup) {
      throw ConfigError("clean beam is only available in cleanup");
    }
    BeamResult beam;
    beam.origin = origin;
    beam.kind = kind;
    const AgentAvatar& av = avatars_[origin];
    const Pos delta = orientation_delta(av.orientation);
    const int length =
        kind == BeamKind::Punish ? config_.beams.punish_length : config_.beams.clean_length;
    Pos p = av.position;
    for (int d = 0; d < length; ++d) {
      p = Pos{p.row + delta.row, p.col + delta.col};
      if (!map_.in_bounds(p) || map_.at(p) == Terrain::Wall) break;
      beam.hit_cells.push_back(p);
      if (kind == BeamKind::Punish) {
        const int occupant = occupancy_[map_.index(p)];
        if (occupant >= 0) {
          beam.hit_agents.push_back(occupant);
          break;
        }
      }
    }
    return beam;
  }

  Observation observe(int agent_id) const {
    if (agent_id < 0 || agent_id >= config_.n_agents) {
      throw std::out_of_range("observe: bad agent id");
    }
    Observation obs;
    obs.own_orientation = avatars_[agent_id].orientation;
    const Pos center = avatars_[agent_id].position;
    int k = 0;
    for (int wr = 0; wr < kWindow; ++wr) {
      for (int wc = 0; wc < kWindow; ++wc, k += 3) {
        const Pos p{center.row + wr - kWindowHalf, center.col + wc - kWindowHalf};
        const Rgb color = render_cell(p, agent_id);
        obs.rgb[k] = color[0];
        obs.rgb[k + 1] = color[1];
        obs.rgb[k + 2] = color[2];
      }
    }
    return obs;
  }

  // Apples currently visible in an agent's observation window.
  int apples_in_window(int agent_id) const {
    const Pos center = avatars_.at(agent_id).position;
    int count = 0;
    for (int dr = -kWindowHalf; dr <= kWindowHalf; ++dr) {
      for (int dc = -kWindowHalf; dc <= kWindowHalf; ++dc) {
        const Pos p{center.row + dr, center.col + dc};
        if (map_.in_bounds(p) && apple_at(p)) ++count;
      }
    }
    return count;
  }

  // Digest of all mutable state; replaying an action log from the same
  // seed must reproduce this exactly.
  uint64_t state_hash() const {
    Hasher h;
    h.i32(step_index_);
    rng_.hash_into(h);
    for (const auto& av : avatars_) {
      h.i32(av.agent_id);
      h.i32(av.position.row);
      h.i32(av.position.col);
      h.pod(av.orientation);
      h.i32(av.frozen_steps);
    }
    if (config_.kind == EnvKind::HarvestPatch) {
      patches_.hash_into(h);
    } else {
      river_.hash_into(h);
      orchard_.hash_into(h);
    }
    for (long long r : episode_returns_) h.pod(r);
    return h.digest();
  }

 private:
  static Pos move_target(const Pos& from, Orientation o, Action a) {
    Pos d{0, 0};
    switch (a) {
      case Action::MoveForward: d = orientation_delta(o); break;
      case Action::MoveBackward: {
        const Pos f = orientation_delta(o);
        d = Pos{-f.row, -f.col};
        break;
      }
      case Action::StrafeLeft: d = orientation_delta(rotate_ccw(o)); break;
      case Action::StrafeRight: d = orientation_delta(rotate_cw(o)); break;
      default: break;
    }
    return Pos{from.row + d.row, from.col + d.col};
  }

  Rgb render_cell(const Pos& p, int observer) const {
    if (!map_.in_bounds(p)) return kColorPadding;
    const int occupant = occupancy_[map_.index(p)];
    if (occupant >= 0) {
      if (occupant == observer) return kColorSelf;
      return kAvatarColors[occupant % kAvatarColors.size()];
    }
    if (apple_at(p)) return kColorApple;
    switch (map_.at(p)) {
      case Terrain::Wall: return kColorWall;
      case Terrain::River: return river_.polluted_at(p) ? kColorRiverPolluted : kColorRiverClean;
      case Terrain::Orchard: return kColorOrchardEmpty;
      case Terrain::Open: return kColorOpen;
    }
    return kColorOpen;
  }

  MapSpec map_;
  WorldConfig config_;
  Rng rng_;
  PatchMap patches_;
  RiverState river_;
  OrchardState orchard_;
  std::vector<AgentAvatar> avatars_;
  std::vector<int> occupancy_;
  std::vector<long long> episode_returns_;
  std::vector<int> priority_;
  int step_index_ = 0;
};

}  // namespace svosim
