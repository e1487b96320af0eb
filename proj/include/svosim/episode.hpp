#pragma once

#include <vector>

#include "svosim/grid.hpp"
#include "svosim/replay.hpp"
#include "svosim/scripted.hpp"
#include "svosim/svo.hpp"

namespace svosim {

struct EndangeredConsumption {
  int step;
  int agent_id;
  int patch_id;
};

struct CleanEvent {
  int step;
  int agent_id;
  int cells;
};

// One harvest-to-clean transition: the agent entered the river having
// visited the orchard since its last river visit. apples_in_view is
// counted from the post-move position at that step.
struct PrepTransition {
  int step;
  int agent_id;
  int apples_in_view;
};

struct EpisodeRecord {
  EnvKind kind = EnvKind::HarvestPatch;
  int n_agents = 0;
  int steps = 0;
  int patch_count = 0;  // HarvestPatch only
  uint64_t seed = 0;    // caller-assigned episode seed, informational
  uint64_t map_hash = 0;
  uint64_t final_state_hash = 0;
  std::vector<RewardVector> step_rewards;    // steps x n, extrinsic
  std::vector<RewardVector> step_utilities;  // steps x n
  std::vector<std::vector<Pos>> positions;   // steps x n, post-step
  std::vector<EndangeredConsumption> endangered;
  std::vector<CleanEvent> cleaning;
  std::vector<PrepTransition> transitions;
  std::vector<int> punish_fired;    // per agent
  std::vector<int> punish_received;
  int apples_collected = 0;

  RewardVector extrinsic_totals() const {
    RewardVector out(n_agents, 0.0);
    for (const auto& row : step_rewards) {
      for (int i = 0; i < n_agents; ++i) out[i] += row[i];
    }
    return out;
  }

  RewardVector utility_totals() const {
    RewardVector out(n_agents, 0.0);
    for (const auto& row : step_utilities) {
      for (int i = 0; i < n_agents; ++i) out[i] += row[i];
    }
    return out;
  }
};

struct EpisodeParams {
  int steps = 1000;
  std::vector<SvoParams> svo;  // one per agent
  double smoothing_lambda = 0.975;
  bool use_smoothing = true;

  void validate(int n_agents) const {
    if (steps < 1) throw ConfigError("episode: steps must be >= 1");
    if (static_cast<int>(svo.size()) != n_agents) {
      throw ConfigError("episode: need one svo entry per agent");
    }
    for (const auto& s : svo) s.validate();
  }
};

// Runs one full episode on a freshly constructed world. Observations
// go to the actors before each step; utilities are computed from the
// step's extrinsic rewards (on smoothed traces when enabled). When
// out_trajs is given it receives one learner trajectory per agent with
// agent_id left at the local index; callers relabel to population ids.
inline EpisodeRecord run_episode(World& world, const std::vector<Actor*>& actors,
                                 const EpisodeParams& ep, Rng& actor_rng,
                                 std::vector<Trajectory>* out_trajs = nullptr,
                                 ReplayWriter* replay = nullptr) {
  const int n = world.n_agents();
  if (static_cast<int>(actors.size()) != n) {
    throw ConfigError("episode: need one actor per agent");
  }
  ep.validate(n);
  if (world.step_index() != 0) throw std::logic_error("episode: world already stepped");

  EpisodeRecord rec;
  rec.kind = world.kind();
  rec.n_agents = n;
  rec.steps = ep.steps;
  rec.map_hash = world.map().hash();
  if (rec.kind == EnvKind::HarvestPatch) rec.patch_count = world.patch_map().patch_count();
  rec.step_rewards.reserve(ep.steps);
  rec.step_utilities.reserve(ep.steps);
  rec.positions.reserve(ep.steps);
  rec.punish_fired.assign(n, 0);
  rec.punish_received.assign(n, 0);

  for (Actor* a : actors) a->reset();
  SmoothedRewards traces(n, ep.smoothing_lambda);

  if (out_trajs != nullptr) {
    out_trajs->assign(n, Trajectory{});
    for (int i = 0; i < n; ++i) {
      (*out_trajs)[i].agent_id = i;
      (*out_trajs)[i].steps = ep.steps;
    }
  }

  const int n_actions = action_count(world.kind());
  std::vector<Action> joint(n);
  std::vector<uint8_t> been_in_orchard(n, 0);
  RewardVector rewards(n);
  double extra[kOrientationInputs];

  for (int t = 0; t < ep.steps; ++t) {
    for (int i = 0; i < n; ++i) {
      const Observation obs = world.observe(i);
      const ActResult ar = actors[i]->step(world, i, obs, actor_rng);
      if (ar.action < 0 || ar.action >= n_actions) {
        throw std::logic_error("episode: actor produced an out-of-range action");
      }
      joint[i] = static_cast<Action>(ar.action);
      if (out_trajs != nullptr) {
        Trajectory& tr = (*out_trajs)[i];
        tr.obs.insert(tr.obs.end(), obs.rgb.begin(), obs.rgb.end());
        orientation_onehot(obs.own_orientation, extra);
        tr.extras.insert(tr.extras.end(), extra, extra + kOrientationInputs);
        tr.actions.push_back(ar.action);
        tr.log_probs.push_back(ar.log_prob);
        tr.values.push_back(ar.value);
      }
    }

    const StepResult sr = world.step(joint);
    for (int i = 0; i < n; ++i) rewards[i] = static_cast<double>(sr.rewards[i]);
    const RewardVector utilities =
        transform_step_rewards(rewards, ep.svo, ep.use_smoothing ? &traces : nullptr);

    rec.step_rewards.push_back(rewards);
    rec.step_utilities.push_back(utilities);
    rec.positions.emplace_back();
    auto& pos_row = rec.positions.back();
    pos_row.reserve(n);
    for (int i = 0; i < n; ++i) pos_row.push_back(world.avatar(i).position);

    rec.apples_collected += sr.apples_collected;
    for (const auto& e : sr.endangered_consumed) {
      rec.endangered.push_back({t, e.agent_id, e.patch_id});
    }
    for (const auto& beam : sr.beams) {
      if (beam.kind == BeamKind::Punish) {
        rec.punish_fired[beam.origin] += 1;
        for (int hit : beam.hit_agents) rec.punish_received[hit] += 1;
      }
    }
    for (int i = 0; i < n; ++i) {
      if (sr.cleaned_cells[i] > 0) rec.cleaning.push_back({t, i, sr.cleaned_cells[i]});
    }
    if (rec.kind == EnvKind::Cleanup) {
      for (int i = 0; i < n; ++i) {
        const Terrain terr = world.map().at(world.avatar(i).position);
        if (terr == Terrain::Orchard) {
          been_in_orchard[i] = 1;
        } else if (terr == Terrain::River) {
          if (been_in_orchard[i]) {
            rec.transitions.push_back({t, i, world.apples_in_window(i)});
          }
          been_in_orchard[i] = 0;
        }
      }
    }

    if (out_trajs != nullptr) {
      for (int i = 0; i < n; ++i) {
        (*out_trajs)[i].extrinsic.push_back(rewards[i]);
        (*out_trajs)[i].utility.push_back(utilities[i]);
      }
    }
    if (replay != nullptr) replay->add_step(joint);
  }

  rec.final_state_hash = world.state_hash();
  if (replay != nullptr) replay->finalize(rec.final_state_hash);
  return rec;
}

// Re-simulates a recorded action log on a compatible world and checks
// the final state digest. The world must be built with the seed, map,
// and parameters of the original episode.
inline void verify_replay(const ReplayReader& reader, World& world) {
  const ReplayHeader& h = reader.header();
  if (world.kind() != h.env) throw IntegrityError("replay: environment mismatch");
  if (world.n_agents() != h.n_agents) throw IntegrityError("replay: agent count mismatch");
  if (world.map().hash() != h.map_hash) throw IntegrityError("replay: map hash mismatch");
  for (int t = 0; t < reader.steps(); ++t) {
    world.step(reader.step_actions(t));
  }
  const uint64_t got = world.state_hash();
  if (got != h.final_hash) {
    throw IntegrityError("replay: final state hash mismatch (log corrupt or parameters differ)");
  }
}

}  // namespace svosim
