#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <memory>
#include <thread>
#include <vector>

#include "svosim/episode.hpp"
#include "svosim/metrics.hpp"
#include "svosim/policy.hpp"

namespace svosim {

struct SvoDistribution {
  enum class Kind { Homogeneous, Normal };
  Kind kind = Kind::Homogeneous;
  double mean = 0.0;  // radians
  double std = 0.0;   // radians, Normal only

  void validate() const {
    if (!(mean >= 0.0 && mean <= kPi / 2.0 + 1e-12)) {
      throw ConfigError("svo distribution: mean must lie in [0, pi/2] radians");
    }
    if (kind == Kind::Normal && !(std >= 0.0)) {
      throw ConfigError("svo distribution: std must be >= 0");
    }
  }
};

struct PopulationSpec {
  int population_size = 30;
  int group_size = 5;
  SvoDistribution distribution;
  double weight = 0.2;
  uint64_t seed = 1;
  ArchSpec arch;

  void validate() const {
    if (population_size < 1) throw ConfigError("population: size must be >= 1");
    if (group_size < 1 || group_size > population_size) {
      throw ConfigError("population: group size must lie in [1, population size]");
    }
    distribution.validate();
    if (!(weight >= 0.0)) throw ConfigError("population: svo weight must be >= 0");
    arch.validate();
  }
};

struct AgentSlot {
  int agent_id = 0;
  SvoParams svo;
  PolicyHandle policy;
  long episodes_played = 0;
  double cumulative_return = 0.0;
};

struct ArenaAssignment {
  int arena_id = 0;
  uint64_t episode_seed = 0;
  std::vector<int> members;  // n distinct population indices
};

// Per-(round, arena, member) training log row plus the member's update
// diagnostics for that round (shared across its arenas within a round).
struct TrainLogRow {
  int round = 0;
  int arena = 0;
  int agent_id = 0;
  double theta_svo = 0.0;  // radians
  double extrinsic_return = 0.0;
  double utility_return = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  int punish_fired = 0;
  bool update_applied = false;
};

struct RoundSummary {
  int round = 0;
  double mean_extrinsic = 0.0;  // per agent-episode
  double mean_utility = 0.0;
  double mean_punish_fired = 0.0;
  double mean_equality = 1.0;
  double mean_entropy = 0.0;
  int quarantined = 0;  // updates rejected for non-finite loss/grad
};

struct TrainingLog {
  std::vector<TrainLogRow> rows;
  std::vector<RoundSummary> rounds;
};

struct TrainOptions {
  MapSpec map;
  WorldConfig world;  // kind, beams, env params; n_agents = group size
  int arenas = 100;
  int rounds = 1;
  int episode_steps = 1000;
  double smoothing_lambda = 0.975;
  bool use_smoothing = true;
  LearnerConfig learner;
  uint64_t seed = 1;
  int threads = 1;

  void validate() const {
    if (arenas < 1) throw ConfigError("train: arenas must be >= 1");
    if (rounds < 0) throw ConfigError("train: rounds must be >= 0");
    if (episode_steps < 1) throw ConfigError("train: episode steps must be >= 1");
    if (threads < 1) throw ConfigError("train: threads must be >= 1");
    learner.validate();
  }
};

// N agent slots with immutable SVO traits and independently learned
// policies, plus the group sampler feeding arenas.
class Population {
 public:
  static Population materialize(const PopulationSpec& spec) {
    spec.validate();
    Population pop;
    pop.spec_ = spec;
    Rng rng(derive_seed(spec.seed, 0x5001));
    pop.slots_.resize(spec.population_size);
    for (int i = 0; i < spec.population_size; ++i) {
      AgentSlot& slot = pop.slots_[i];
      slot.agent_id = i;
      double theta = spec.distribution.mean;
      if (spec.distribution.kind == SvoDistribution::Kind::Normal) {
        theta = rng.normal(spec.distribution.mean, spec.distribution.std);
        theta = std::clamp(theta, 0.0, kPi / 2.0);
      }
      slot.svo.theta_svo = theta;
      slot.svo.weight = spec.weight;
      slot.svo.validate();
      slot.policy = PolicyHandle(spec.arch, derive_seed(spec.seed, 0x5002, i));
    }
    return pop;
  }

  const PopulationSpec& spec() const { return spec_; }
  int size() const { return static_cast<int>(slots_.size()); }
  int group_size() const { return spec_.group_size; }
  const AgentSlot& slot(int i) const { return slots_.at(i); }
  AgentSlot& slot(int i) { return slots_.at(i); }

  // n distinct members drawn uniformly without replacement, plus a
  // fresh episode seed taken from the same generator.
  ArenaAssignment sample_arena(Rng& rng, int arena_id = 0) const {
    ArenaAssignment a;
    a.arena_id = arena_id;
    a.members = rng.sample_without_replacement(size(), spec_.group_size);
    a.episode_seed = rng.next_u64();
    return a;
  }

  // Training: every round samples a group for each arena, plays one
  // episode per arena, routes each member's trajectory to its own
  // learner, and applies one update per participating agent. Arena
  // seeds derive from (seed, round, arena), so results are identical
  // whether arenas run serially or on threads.
  TrainingLog train(const TrainOptions& opts,
                    const std::function<void(int, const Population&)>& round_end = {}) {
    opts.validate();
    if (opts.world.n_agents != spec_.group_size) {
      throw ConfigError("train: world agent count must equal the group size");
    }
    TrainingLog log;
    std::vector<ArenaAssignment> assignments(opts.arenas);
    std::vector<EpisodeRecord> records(opts.arenas);
    std::vector<std::vector<Trajectory>> arena_trajs(opts.arenas);

    for (int round = 0; round < opts.rounds; ++round) {
      Rng sampler(derive_seed(opts.seed, 0xA001, round));
      for (int a = 0; a < opts.arenas; ++a) {
        assignments[a] = sample_arena(sampler, a);
        assignments[a].episode_seed = derive_seed(opts.seed, round, a);
      }

      auto run_arena = [&](int a) {
        const ArenaAssignment& asg = assignments[a];
        WorldConfig wc = opts.world;
        World world(opts.map, wc, derive_seed(asg.episode_seed, 0));
        Rng actor_rng(derive_seed(asg.episode_seed, 1));
        std::vector<std::unique_ptr<Actor>> actors;
        std::vector<Actor*> actor_ptrs;
        EpisodeParams ep;
        ep.steps = opts.episode_steps;
        ep.smoothing_lambda = opts.smoothing_lambda;
        ep.use_smoothing = opts.use_smoothing;
        for (int m : asg.members) {
          actors.push_back(std::make_unique<NeuralActor>(&slots_[m].policy));
          actor_ptrs.push_back(actors.back().get());
          ep.svo.push_back(slots_[m].svo);
        }
        records[a] = run_episode(world, actor_ptrs, ep, actor_rng, &arena_trajs[a]);
        records[a].seed = asg.episode_seed;
        for (size_t k = 0; k < asg.members.size(); ++k) {
          arena_trajs[a][k].agent_id = asg.members[k];
        }
      };

      if (opts.threads == 1) {
        for (int a = 0; a < opts.arenas; ++a) run_arena(a);
      } else {
        std::vector<std::thread> workers;
        std::atomic<int> next{0};
        const int n_workers = std::min(opts.threads, opts.arenas);
        for (int w = 0; w < n_workers; ++w) {
          workers.emplace_back([&]() {
            while (true) {
              const int a = next.fetch_add(1);
              if (a >= opts.arenas) break;
              run_arena(a);
            }
          });
        }
        for (auto& t : workers) t.join();
      }

      // route trajectories and update each participating agent once
      std::vector<std::vector<Trajectory>> batches(size());
      for (int a = 0; a < opts.arenas; ++a) {
        for (auto& tr : arena_trajs[a]) {
          batches[tr.agent_id].push_back(std::move(tr));
        }
        arena_trajs[a].clear();
      }
      std::vector<UpdateStats> agent_stats(size());
      int quarantined = 0;
      for (int i = 0; i < size(); ++i) {
        if (batches[i].empty()) continue;
        agent_stats[i] = slots_[i].policy.update(batches[i], opts.learner);
        if (!agent_stats[i].applied) quarantined += 1;
      }

      // log rows + summary
      RoundSummary rs;
      rs.round = round;
      rs.quarantined = quarantined;
      double eq_sum = 0.0;
      long n_rows = 0;
      double ent_sum = 0.0;
      int ent_count = 0;
      for (int a = 0; a < opts.arenas; ++a) {
        const EpisodeRecord& rec = records[a];
        const RewardVector totals = rec.extrinsic_totals();
        const RewardVector utils = rec.utility_totals();
        if (rec.n_agents >= 2) eq_sum += equality(totals).score;
        for (size_t k = 0; k < assignments[a].members.size(); ++k) {
          const int agent = assignments[a].members[k];
          TrainLogRow row;
          row.round = round;
          row.arena = a;
          row.agent_id = agent;
          row.theta_svo = slots_[agent].svo.theta_svo;
          row.extrinsic_return = totals[k];
          row.utility_return = utils[k];
          row.policy_loss = agent_stats[agent].policy_loss;
          row.value_loss = agent_stats[agent].value_loss;
          row.entropy = agent_stats[agent].entropy;
          row.punish_fired = rec.punish_fired[k];
          row.update_applied = agent_stats[agent].applied;
          log.rows.push_back(row);
          rs.mean_extrinsic += totals[k];
          rs.mean_utility += utils[k];
          rs.mean_punish_fired += rec.punish_fired[k];
          n_rows += 1;
          slots_[agent].episodes_played += 1;
          slots_[agent].cumulative_return += totals[k];
        }
      }
      for (int i = 0; i < size(); ++i) {
        if (agent_stats[i].steps > 0) {
          ent_sum += agent_stats[i].entropy;
          ent_count += 1;
        }
      }
      rs.mean_extrinsic /= static_cast<double>(n_rows);
      rs.mean_utility /= static_cast<double>(n_rows);
      rs.mean_punish_fired /= static_cast<double>(n_rows);
      rs.mean_equality = eq_sum / static_cast<double>(opts.arenas);
      rs.mean_entropy = ent_count > 0 ? ent_sum / ent_count : 0.0;
      log.rounds.push_back(rs);

      if (round_end) round_end(round, *this);
    }
    return log;
  }

 private:
  PopulationSpec spec_;
  std::vector<AgentSlot> slots_;
};

}  // namespace svosim
