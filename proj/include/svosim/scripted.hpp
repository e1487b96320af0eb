#pragma once

#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "svosim/grid.hpp"
#include "svosim/policy.hpp"

namespace svosim {

// Per-agent decision maker driven by the episode loop. The learned
// actor uses only its observation; the scripted baselines are test
// oracles and may consult privileged world state (endangerment, river
// pollution), which the policy network never sees.
class Actor {
 public:
  virtual ~Actor() = default;
  virtual void reset() {}
  virtual ActResult step(const World& world, int agent_id, const Observation& obs, Rng& rng) = 0;
};

constexpr int kOrientationInputs = 4;

inline void orientation_onehot(Orientation o, double out[kOrientationInputs]) {
  for (int i = 0; i < kOrientationInputs; ++i) out[i] = 0.0;
  out[static_cast<int>(o)] = 1.0;
}

class NeuralActor : public Actor {
 public:
  explicit NeuralActor(const PolicyHandle* policy, bool greedy = false)
      : policy_(policy), greedy_(greedy) {
    const ArchSpec& s = policy_->spec();
    if (s.obs_rows != kWindow || s.obs_cols != kWindow || s.obs_channels != 3 ||
        s.extra_inputs != kOrientationInputs) {
      throw ConfigError("neural actor: architecture does not match the observation window");
    }
    h_ = policy_->initial_state();
  }

  void reset() override { h_.assign(policy_->spec().gru, 0.0); }

  ActResult step(const World&, int, const Observation& obs, Rng& rng) override {
    double extra[kOrientationInputs];
    orientation_onehot(obs.own_orientation, extra);
    return policy_->act(obs.rgb.data(), extra, h_, rng, ws_, greedy_);
  }

 private:
  const PolicyHandle* policy_;
  bool greedy_;
  std::vector<double> h_;
  ActWorkspace ws_;
};

// Plays back a fixed action list (NoOp once exhausted). Used to build
// hand-computable episode traces in tests.
class SequenceActor : public Actor {
 public:
  explicit SequenceActor(std::vector<Action> actions) : actions_(std::move(actions)) {}
  void reset() override { next_ = 0; }
  ActResult step(const World&, int, const Observation&, Rng&) override {
    ActResult r;
    r.action = static_cast<int>(next_ < actions_.size() ? actions_[next_++] : Action::NoOp);
    return r;
  }

 private:
  std::vector<Action> actions_;
  size_t next_ = 0;
};

// --- direction helpers -----------------------------------------------

inline Orientation opposite(Orientation o) { return rotate_cw(rotate_cw(o)); }

// Action producing a unit move toward grid direction `dir` while facing
// `facing` (movement never needs a rotation first).
inline Action move_action_for(Orientation facing, Orientation dir) {
  if (dir == facing) return Action::MoveForward;
  if (dir == opposite(facing)) return Action::MoveBackward;
  if (dir == rotate_ccw(facing)) return Action::StrafeLeft;
  return Action::StrafeRight;
}

// Rotation bringing `facing` toward `dir`; NoOp when already aligned.
inline Action face_action_for(Orientation facing, Orientation dir) {
  if (dir == facing) return Action::NoOp;
  if (dir == rotate_ccw(facing)) return Action::RotateLeft;
  return Action::RotateRight;
}

namespace detail {

struct PathProbe {
  bool found = false;
  Orientation first_dir = Orientation::North;
  int dist = 0;
  Pos target{0, 0};
};

constexpr Pos kDirDelta[4] = {{-1, 0}, {0, 1}, {1, 0}, {0, -1}};  // N, E, S, W

// Breadth-first search over an abstract grid. Neighbor order is fixed
// (N, E, S, W) so ties resolve deterministically.
template <typename Blocked, typename Target>
PathProbe bfs_grid(int height, int width, Pos start, Blocked blocked, Target target) {
  PathProbe out;
  std::vector<int16_t> parent(static_cast<size_t>(height) * width, -2);  // -2 unseen, -1 root
  auto idx = [width](const Pos& p) { return static_cast<size_t>(p.row) * width + p.col; };
  std::deque<Pos> queue;
  parent[idx(start)] = -1;
  queue.push_back(start);
  while (!queue.empty()) {
    const Pos p = queue.front();
    queue.pop_front();
    if (!(p == start) && target(p)) {
      // walk back to the first step off the start cell
      out.found = true;
      out.target = p;
      Pos cur = p;
      int dist = 0;
      while (true) {
        const int par = parent[idx(cur)];
        ++dist;
        const Pos prev{cur.row - kDirDelta[par].row, cur.col - kDirDelta[par].col};
        if (prev == start) {
          out.first_dir = static_cast<Orientation>(par);
          break;
        }
        cur = prev;
      }
      out.dist = dist;
      return out;
    }
    for (int d = 0; d < 4; ++d) {
      const Pos q{p.row + kDirDelta[d].row, p.col + kDirDelta[d].col};
      if (q.row < 0 || q.row >= height || q.col < 0 || q.col >= width) continue;
      if (parent[idx(q)] != -2) continue;
      if (blocked(q)) continue;
      parent[idx(q)] = static_cast<int16_t>(d);
      queue.push_back(q);
    }
  }
  return out;
}

enum class ObsCell : uint8_t { Blocked, Open, Apple };

inline ObsCell decode_obs_cell(const Observation& obs, int wr, int wc) {
  if (obs.pixel_is(wr, wc, kColorApple)) return ObsCell::Apple;
  if (obs.pixel_is(wr, wc, kColorOpen) || obs.pixel_is(wr, wc, kColorOrchardEmpty) ||
      obs.pixel_is(wr, wc, kColorRiverClean) || obs.pixel_is(wr, wc, kColorRiverPolluted) ||
      obs.pixel_is(wr, wc, kColorSelf)) {
    return ObsCell::Open;
  }
  return ObsCell::Blocked;  // padding, walls, other avatars, unknown
}

}  // namespace detail

class RandomActor : public Actor {
 public:
  ActResult step(const World& world, int, const Observation&, Rng& rng) override {
    ActResult r;
    r.action = static_cast<int>(rng.bounded(static_cast<uint32_t>(action_count(world.kind()))));
    return r;
  }
};

// Walks a shortest path (within its window) to the nearest visible
// apple; wanders forward with occasional random turns otherwise.
class GreedyHarvesterActor : public Actor {
 public:
  ActResult step(const World&, int, const Observation& obs, Rng& rng) override {
    ActResult r;
    r.action = static_cast<int>(choose(obs, rng));
    return r;
  }

 protected:
  virtual bool cell_forbidden(const Observation&, int, int) const { return false; }
  virtual bool target_allowed(const Observation&, int, int) const { return true; }

  Action choose(const Observation& obs, Rng& rng) const {
    const Pos center{kWindowHalf, kWindowHalf};
    auto blocked = [&](const Pos& p) {
      if (detail::decode_obs_cell(obs, p.row, p.col) == detail::ObsCell::Blocked) return true;
      return cell_forbidden(obs, p.row, p.col);
    };
    auto target = [&](const Pos& p) {
      return detail::decode_obs_cell(obs, p.row, p.col) == detail::ObsCell::Apple &&
             target_allowed(obs, p.row, p.col);
    };
    const auto probe = detail::bfs_grid(kWindow, kWindow, center, blocked, target);
    if (probe.found) return move_action_for(obs.own_orientation, probe.first_dir);
    // wander: mostly forward, random turns to escape corners
    const double u = rng.uniform();
    if (u < 0.1) return Action::RotateLeft;
    if (u < 0.2) return Action::RotateRight;
    const Pos fwd_delta = orientation_delta(obs.own_orientation);
    const Pos fwd{center.row + fwd_delta.row, center.col + fwd_delta.col};
    if (!blocked(fwd)) return Action::MoveForward;
    return Action::RotateRight;
  }
};

// Greedy harvester that refuses to step onto (or aim for) apples in
// patches close to depletion, so it never consumes a last apple.
// Requires patch state, which is not in the observation (privileged).
class SustainableHarvesterActor : public GreedyHarvesterActor {
 public:
  static constexpr int kMinLivePatch = 3;  // patches below this are off-limits

  ActResult step(const World& world, int agent_id, const Observation& obs, Rng& rng) override {
    if (world.kind() != EnvKind::HarvestPatch) {
      throw ConfigError("sustainable harvester only runs in harvestpatch");
    }
    world_ = &world;
    origin_ = world.avatar(agent_id).position;
    ActResult r;
    r.action = static_cast<int>(choose(obs, rng));
    world_ = nullptr;
    return r;
  }

 protected:
  bool cell_forbidden(const Observation&, int wr, int wc) const override { return risky(wr, wc); }
  bool target_allowed(const Observation&, int wr, int wc) const override { return !risky(wr, wc); }

 private:
  bool risky(int wr, int wc) const {
    const Pos p{origin_.row + wr - kWindowHalf, origin_.col + wc - kWindowHalf};
    if (!world_->map().in_bounds(p)) return true;
    const PatchMap& patches = world_->patch_map();
    if (!patches.apple_at(p)) return false;  // bare patch sites are safe to cross
    return patches.live_count_at(p) < kMinLivePatch;
  }

  const World* world_ = nullptr;
  Pos origin_{0, 0};
};

// Navigates to the nearest polluted river cell and fires the cleaning
// beam whenever pollution is in range. Uses privileged pollution and
// avatar-position state (test oracle, not a learned policy).
class DedicatedCleanerActor : public Actor {
 public:
  ActResult step(const World& world, int agent_id, const Observation&, Rng& rng) override {
    if (world.kind() != EnvKind::Cleanup) {
      throw ConfigError("dedicated cleaner only runs in cleanup");
    }
    ActResult r;
    r.action = static_cast<int>(choose(world, agent_id, rng));
    return r;
  }

 private:
  Action choose(const World& world, int agent_id, Rng& rng) const {
    const MapSpec& map = world.map();
    const RiverState& river = world.river();
    const AgentAvatar& self = world.avatar(agent_id);

    // fire if the beam would hit pollution right now
    if (beam_hits_pollution(world, self.position, self.orientation)) return Action::FireClean;
    // rotate toward an adjacent direction whose beam would hit
    for (int d = 0; d < 4; ++d) {
      const Orientation dir = static_cast<Orientation>(d);
      if (dir == self.orientation) continue;
      if (beam_hits_pollution(world, self.position, dir)) {
        return face_action_for(self.orientation, dir);
      }
    }
    // otherwise walk toward the nearest polluted cell
    auto blocked = [&](const Pos& p) {
      if (!map.walkable(p)) return true;
      for (int i = 0; i < world.n_agents(); ++i) {
        if (i != agent_id && world.avatar(i).position == p) return true;
      }
      return false;
    };
    auto target = [&](const Pos& p) { return river.polluted_at(p); };
    const auto probe = detail::bfs_grid(map.height, map.width, self.position, blocked, target);
    if (probe.found) return move_action_for(self.orientation, probe.first_dir);
    // nothing to clean and nothing reachable: idle near the river
    const double u = rng.uniform();
    if (u < 0.25) return Action::RotateLeft;
    return Action::NoOp;
  }

  static bool beam_hits_pollution(const World& world, Pos from, Orientation dir) {
    const MapSpec& map = world.map();
    const Pos delta = orientation_delta(dir);
    Pos p = from;
    for (int d = 0; d < 3; ++d) {
      p = Pos{p.row + delta.row, p.col + delta.col};
      if (!map.in_bounds(p) || map.at(p) == Terrain::Wall) break;
      if (world.river().polluted_at(p)) return true;
    }
    return false;
  }
};

enum class ScriptedKind { Random, GreedyHarvester, SustainableHarvester, DedicatedCleaner };

inline ScriptedKind scripted_kind_from_name(const std::string& name) {
  if (name == "random") return ScriptedKind::Random;
  if (name == "greedy-harvester") return ScriptedKind::GreedyHarvester;
  if (name == "sustainable-harvester") return ScriptedKind::SustainableHarvester;
  if (name == "dedicated-cleaner") return ScriptedKind::DedicatedCleaner;
  throw ConfigError("unknown scripted policy kind: " + name);
}

inline const char* scripted_kind_name(ScriptedKind k) {
  switch (k) {
    case ScriptedKind::Random: return "random";
    case ScriptedKind::GreedyHarvester: return "greedy-harvester";
    case ScriptedKind::SustainableHarvester: return "sustainable-harvester";
    case ScriptedKind::DedicatedCleaner: return "dedicated-cleaner";
  }
  return "?";
}

inline std::unique_ptr<Actor> make_scripted(ScriptedKind kind, EnvKind env) {
  switch (kind) {
    case ScriptedKind::Random: return std::make_unique<RandomActor>();
    case ScriptedKind::GreedyHarvester: return std::make_unique<GreedyHarvesterActor>();
    case ScriptedKind::SustainableHarvester:
      if (env != EnvKind::HarvestPatch) {
        throw ConfigError("sustainable-harvester requires harvestpatch");
      }
      return std::make_unique<SustainableHarvesterActor>();
    case ScriptedKind::DedicatedCleaner:
      if (env != EnvKind::Cleanup) {
        throw ConfigError("dedicated-cleaner requires cleanup");
      }
      return std::make_unique<DedicatedCleanerActor>();
  }
  throw ConfigError("unknown scripted policy kind");
}

}  // namespace svosim
