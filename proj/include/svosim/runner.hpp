#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "svosim/config.hpp"
#include "svosim/metrics.hpp"
#include "svosim/population.hpp"
#include "svosim/version.hpp"

namespace svosim {

namespace fs = std::filesystem;

namespace runner_detail {

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
}

inline std::string hex64(uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string round_dir_name(int round) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "round_%04d", round);
  return buf;
}

inline std::string agent_file_name(int agent) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "agent_%02d.ckpt", agent);
  return buf;
}

}  // namespace runner_detail

// --- checkpoints ---------------------------------------------------------

inline void save_checkpoint_dir(const Population& pop, const fs::path& dir, int round,
                                EnvKind env) {
  fs::create_directories(dir);
  json manifest;
  manifest["format_version"] = 1;
  manifest["tool_version"] = kVersion;
  manifest["environment"] = env_name(env);
  manifest["round"] = round;
  manifest["population_size"] = pop.size();
  manifest["group_size"] = pop.group_size();
  manifest["svo_weight"] = pop.spec().weight;
  json agents = json::array();
  for (int i = 0; i < pop.size(); ++i) {
    const AgentSlot& slot = pop.slot(i);
    const std::string file = runner_detail::agent_file_name(i);
    slot.policy.save((dir / file).string());
    json a;
    a["id"] = i;
    a["file"] = file;
    a["theta_svo_rad"] = slot.svo.theta_svo;
    a["theta_svo_deg"] = rad_to_deg(slot.svo.theta_svo);
    a["weight"] = slot.svo.weight;
    a["episodes_played"] = slot.episodes_played;
    agents.push_back(a);
  }
  manifest["agents"] = agents;
  runner_detail::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

struct LoadedAgent {
  int id = 0;
  SvoParams svo;
  PolicyHandle policy;
};

struct LoadedCheckpoint {
  EnvKind env = EnvKind::HarvestPatch;
  int round = 0;
  int group_size = 0;
  std::vector<LoadedAgent> agents;
};

inline LoadedCheckpoint load_checkpoint_dir(const std::string& dir) {
  const fs::path root(dir);
  const fs::path manifest_path = root / "manifest.json";
  if (!fs::exists(manifest_path)) {
    throw ConfigError("checkpoint: no manifest.json in " + dir);
  }
  const json m = load_json_file(manifest_path.string());
  LoadedCheckpoint out;
  try {
    if (m.at("format_version").get<int>() != 1) {
      throw IntegrityError("checkpoint: unsupported manifest format version");
    }
    out.env = env_from_name(m.at("environment").get<std::string>());
    out.round = m.at("round").get<int>();
    out.group_size = m.at("group_size").get<int>();
    for (const json& a : m.at("agents")) {
      LoadedAgent la;
      la.id = a.at("id").get<int>();
      la.svo.theta_svo = a.at("theta_svo_rad").get<double>();
      la.svo.weight = a.at("weight").get<double>();
      la.policy = PolicyHandle::load((root / a.at("file").get<std::string>()).string());
      out.agents.push_back(std::move(la));
    }
  } catch (const json::exception& e) {
    throw IntegrityError("checkpoint: bad manifest in " + dir + ": " + e.what());
  }
  if (out.agents.empty()) throw IntegrityError("checkpoint: manifest lists no agents");
  return out;
}

// --- train ---------------------------------------------------------------

struct TrainArtifacts {
  std::string out_dir;
  int rounds = 0;
  int quarantined_total = 0;
  double window_collective = 0.0;  // equilibrium-window means
  double window_equality = 0.0;
  double window_median_return = 0.0;
  bool has_window_metrics = false;
};

inline TrainArtifacts cmd_train(const RunConfig& c, bool dry_run, std::ostream& out) {
  c.validate();
  const MapSpec map = load_map(c.map);
  TrainArtifacts art;
  art.out_dir = c.out_dir;
  art.rounds = c.rounds;

  if (dry_run) {
    out << "train plan: env=" << env_name(c.env) << " map=" << c.map << " population="
        << c.population_size << " group=" << c.group_size << " arenas=" << c.arenas
        << " rounds=" << c.rounds << " episode_steps=" << c.episode_steps
        << " threads=" << c.effective_threads() << "\n";
    out << "train plan: out_dir=" << c.out_dir << "\n";
    return art;
  }

  const fs::path root(c.out_dir);
  fs::create_directories(root / "checkpoints");
  fs::create_directories(root / "replays");
  runner_detail::write_text(root / "config.json", run_config_to_json(c).dump(2) + "\n");

  Population pop = Population::materialize(c.population_spec());

  // fixed trait table for the run
  {
    std::string csv = "agent_id,theta_svo_deg,theta_svo_rad,weight\n";
    for (int i = 0; i < pop.size(); ++i) {
      const AgentSlot& s = pop.slot(i);
      csv += std::to_string(i) + "," + fmt_double(rad_to_deg(s.svo.theta_svo)) + "," +
             fmt_double(s.svo.theta_svo) + "," + fmt_double(s.svo.weight) + "\n";
    }
    runner_detail::write_text(root / "population.csv", csv);
  }

  TrainOptions opts = c.train_options(map);
  const int print_every = c.rounds > 50 ? 10 : 1;
  const auto round_end = [&](int round, const Population& p) {
    if (c.checkpoint_every > 0 && (round + 1) % c.checkpoint_every == 0) {
      save_checkpoint_dir(p, root / "checkpoints" / runner_detail::round_dir_name(round + 1),
                          round + 1, c.env);
    }
    if ((round + 1) % print_every == 0 || round + 1 == c.rounds) {
      out << "round " << round + 1 << "/" << c.rounds << "\n";
    }
  };

  const TrainingLog log = c.rounds > 0 ? pop.train(opts, round_end) : TrainingLog{};

  save_checkpoint_dir(pop, root / "checkpoints" / "final", c.rounds, c.env);

  // training_log.csv: one row per (round, arena, member)
  {
    std::string csv =
        "round,arena,agent_id,theta_svo_deg,extrinsic_return,utility_return,"
        "policy_loss,value_loss,entropy,punish_fired,update_applied\n";
    for (const TrainLogRow& r : log.rows) {
      csv += std::to_string(r.round) + "," + std::to_string(r.arena) + "," +
             std::to_string(r.agent_id) + "," + fmt_double(rad_to_deg(r.theta_svo)) + "," +
             fmt_double(r.extrinsic_return) + "," + fmt_double(r.utility_return) + "," +
             fmt_double(r.policy_loss) + "," + fmt_double(r.value_loss) + "," +
             fmt_double(r.entropy) + "," + std::to_string(r.punish_fired) + "," +
             (r.update_applied ? "1" : "0") + "\n";
    }
    runner_detail::write_text(root / "training_log.csv", csv);
  }
  {
    std::string csv =
        "round,mean_extrinsic,mean_utility,mean_punish_fired,mean_equality,"
        "mean_entropy,quarantined\n";
    for (const RoundSummary& r : log.rounds) {
      csv += std::to_string(r.round) + "," + fmt_double(r.mean_extrinsic) + "," +
             fmt_double(r.mean_utility) + "," + fmt_double(r.mean_punish_fired) + "," +
             fmt_double(r.mean_equality) + "," + fmt_double(r.mean_entropy) + "," +
             std::to_string(r.quarantined) + "\n";
    }
    runner_detail::write_text(root / "round_summary.csv", csv);
  }

  for (const RoundSummary& r : log.rounds) art.quarantined_total += r.quarantined;

  // equilibrium-window metrics over the trailing rounds
  json window_json;
  if (!log.rounds.empty()) {
    EquilibriumWindow window;
    std::vector<double> series;
    series.reserve(log.rounds.size());
    for (const RoundSummary& r : log.rounds) series.push_back(r.mean_extrinsic);
    const int start = window.resolve_start(series);
    double coll = 0.0, eq = 0.0;
    int count = 0;
    for (size_t r = static_cast<size_t>(start); r < log.rounds.size(); ++r) {
      coll += log.rounds[r].mean_extrinsic * c.group_size;
      eq += log.rounds[r].mean_equality;
      count += 1;
    }
    std::vector<EpisodeEntry> entries;
    entries.reserve(log.rows.size());
    for (const TrainLogRow& r : log.rows) {
      entries.push_back({r.round, r.agent_id, r.extrinsic_return});
    }
    art.window_collective = coll / count;
    art.window_equality = eq / count;
    art.window_median_return = median_return(entries, c.rounds, window);
    art.has_window_metrics = true;
    window_json["start_round"] = start;
    window_json["rounds"] = count;
    window_json["collective_return"] = art.window_collective;
    window_json["equality"] = art.window_equality;
    window_json["median_return"] = art.window_median_return;
  }

  // demo episode recorded as a verifiable action log
  {
    Rng demo_rng(derive_seed(c.seed, 0xDE30));
    ArenaAssignment asg = pop.sample_arena(demo_rng);
    asg.episode_seed = derive_seed(c.seed, 0xDE31);
    const uint64_t world_seed = derive_seed(asg.episode_seed, 0);
    World world(map, c.world_config(), world_seed);
    Rng actor_rng(derive_seed(asg.episode_seed, 1));
    std::vector<std::unique_ptr<Actor>> actors;
    std::vector<Actor*> ptrs;
    EpisodeParams ep;
    ep.steps = c.episode_steps;
    ep.smoothing_lambda = c.smoothing_lambda;
    ep.use_smoothing = c.use_smoothing;
    for (int m : asg.members) {
      actors.push_back(std::make_unique<NeuralActor>(&pop.slot(m).policy));
      ptrs.push_back(actors.back().get());
      ep.svo.push_back(pop.slot(m).svo);
    }
    ReplayWriter writer(c.env, c.group_size, world_seed, map.hash());
    const EpisodeRecord rec = run_episode(world, ptrs, ep, actor_rng, nullptr, &writer);
    writer.write_file((root / "replays" / "final_demo.svrp").string());
    json side;
    side["members"] = asg.members;
    side["world_seed"] = world_seed;
    side["steps"] = c.episode_steps;
    side["collective_return"] = collective_return(rec);
    side["final_state_hash"] = runner_detail::hex64(rec.final_state_hash);
    runner_detail::write_text(root / "replays" / "final_demo.json", side.dump(2) + "\n");
  }

  // summary.json
  {
    json s;
    s["tool_version"] = kVersion;
    s["environment"] = env_name(c.env);
    s["map"] = c.map;
    s["seed"] = c.seed;
    s["rounds"] = c.rounds;
    s["arenas"] = c.arenas;
    s["episode_steps"] = c.episode_steps;
    s["population_size"] = c.population_size;
    s["group_size"] = c.group_size;
    s["svo_weight"] = c.svo_weight;
    s["mean_deg"] = rad_to_deg(c.distribution.mean);
    s["std_deg"] = rad_to_deg(c.distribution.std);
    s["quarantined_total"] = art.quarantined_total;
    if (!window_json.is_null()) s["equilibrium_window"] = window_json;
    if (!log.rounds.empty()) {
      const RoundSummary& last = log.rounds.back();
      s["final_round"] = {{"round", last.round},
                          {"mean_extrinsic", last.mean_extrinsic},
                          {"mean_utility", last.mean_utility},
                          {"mean_punish_fired", last.mean_punish_fired},
                          {"mean_equality", last.mean_equality},
                          {"mean_entropy", last.mean_entropy}};
    }
    json agents = json::array();
    for (int i = 0; i < pop.size(); ++i) {
      const AgentSlot& slot = pop.slot(i);
      json a;
      a["id"] = i;
      a["theta_svo_deg"] = rad_to_deg(slot.svo.theta_svo);
      a["episodes_played"] = slot.episodes_played;
      a["mean_return"] = slot.episodes_played > 0
                             ? slot.cumulative_return / slot.episodes_played
                             : 0.0;
      agents.push_back(a);
    }
    s["agents"] = agents;
    runner_detail::write_text(root / "summary.json", s.dump(2) + "\n");
  }

  out << "train done: " << c.out_dir << "\n";
  return art;
}

// --- eval ----------------------------------------------------------------

struct EvalOptions {
  std::string checkpoint_dir;  // empty = scripted policies
  std::string policy_kind;     // overrides config when non-empty
  int episodes = -1;           // overrides config when >= 0
  std::string out_dir;         // defaults to <run out_dir>/eval
  bool dry_run = false;
};

inline int cmd_eval(const RunConfig& c, const EvalOptions& opt, std::ostream& out) {
  c.validate();
  const int episodes = opt.episodes >= 0 ? opt.episodes : c.eval.episodes;
  const std::string policy_kind =
      !opt.policy_kind.empty() ? opt.policy_kind : c.eval.policy_kind;
  const bool scripted = opt.checkpoint_dir.empty();
  if (scripted && policy_kind.empty()) {
    throw ConfigError("eval: give a checkpoint directory or a scripted policy kind");
  }

  if (opt.dry_run) {
    out << "eval plan: episodes=" << episodes << " agents_per_episode=" << c.group_size
        << " env=" << env_name(c.env) << " policies="
        << (scripted ? policy_kind : "checkpoint:" + opt.checkpoint_dir) << "\n";
    return 0;
  }

  const MapSpec map = load_map(c.map);
  const uint64_t eval_seed = c.eval.seed != 0 ? c.eval.seed : derive_seed(c.seed, 0xE7A1);
  const fs::path out_root =
      opt.out_dir.empty() ? fs::path(c.out_dir) / "eval" : fs::path(opt.out_dir);
  fs::create_directories(out_root);

  LoadedCheckpoint ckpt;
  ScriptedKind skind = ScriptedKind::Random;
  if (scripted) {
    skind = scripted_kind_from_name(policy_kind);
  } else {
    ckpt = load_checkpoint_dir(opt.checkpoint_dir);
    if (ckpt.env != c.env) throw ConfigError("eval: checkpoint environment does not match");
    if (static_cast<int>(ckpt.agents.size()) < c.group_size) {
      throw ConfigError("eval: checkpoint has fewer agents than the group size");
    }
  }

  std::string csv = metrics_csv_header() + "\n";
  Rng sampler(derive_seed(eval_seed, 0xE001));
  double sum_collective = 0.0, sum_equality = 0.0;
  long punish_total = 0;
  for (int e = 0; e < episodes; ++e) {
    std::vector<int> members(c.group_size);
    if (scripted) {
      for (int i = 0; i < c.group_size; ++i) members[i] = i;
    } else {
      members = sampler.sample_without_replacement(static_cast<int>(ckpt.agents.size()),
                                                   c.group_size);
    }
    World world(map, c.world_config(), derive_seed(eval_seed, e, 0));
    Rng actor_rng(derive_seed(eval_seed, e, 1));
    std::vector<std::unique_ptr<Actor>> actors;
    std::vector<Actor*> ptrs;
    EpisodeParams ep;
    ep.steps = c.episode_steps;
    ep.smoothing_lambda = c.smoothing_lambda;
    ep.use_smoothing = c.use_smoothing;
    for (int i = 0; i < c.group_size; ++i) {
      if (scripted) {
        actors.push_back(make_scripted(skind, c.env));
        SvoParams svo;
        svo.theta_svo = c.distribution.mean;
        svo.weight = c.svo_weight;
        ep.svo.push_back(svo);
      } else {
        actors.push_back(std::make_unique<NeuralActor>(&ckpt.agents[members[i]].policy));
        ep.svo.push_back(ckpt.agents[members[i]].svo);
      }
      ptrs.push_back(actors.back().get());
    }
    const EpisodeRecord rec = run_episode(world, ptrs, ep, actor_rng);
    const EpisodeMetrics m = compute_episode_metrics(rec);
    for (int i = 0; i < c.group_size; ++i) {
      const int label = scripted ? i : ckpt.agents[members[i]].id;
      csv += metrics_csv_row(e, label, i, rad_to_deg(ep.svo[i].theta_svo), m) + "\n";
      punish_total += rec.punish_fired[i];
    }
    sum_collective += m.collective;
    sum_equality += m.equality_score;
  }
  runner_detail::write_text(out_root / "eval_episodes.csv", csv);

  json s;
  s["tool_version"] = kVersion;
  s["environment"] = env_name(c.env);
  s["episodes"] = episodes;
  s["group_size"] = c.group_size;
  s["policies"] = scripted ? policy_kind : "checkpoint";
  s["eval_seed"] = eval_seed;
  if (episodes > 0) {
    s["mean_collective_return"] = sum_collective / episodes;
    s["mean_equality"] = sum_equality / episodes;
    s["mean_punish_fired_per_agent"] =
        static_cast<double>(punish_total) / (static_cast<double>(episodes) * c.group_size);
  }
  runner_detail::write_text(out_root / "eval_summary.json", s.dump(2) + "\n");
  out << "eval done: " << out_root.string() << " (" << episodes << " episodes)\n";
  return 0;
}

// --- sweep ---------------------------------------------------------------

inline int cmd_sweep(const SweepSpec& spec, bool dry_run, std::ostream& out) {
  const std::vector<SweepCell> cells = spec.enumerate();
  out << "sweep plan: " << cells.size() << " populations\n";
  if (dry_run) {
    for (size_t i = 0; i < cells.size(); ++i) {
      const RunConfig& cc = cells[i].config;
      char line[256];
      std::snprintf(line, sizeof(line),
                    "cell %03zu: %s mean_deg=%g std_deg=%g weight=%g seed=%llu out=%s\n", i,
                    cells[i].label.c_str(), rad_to_deg(cc.distribution.mean),
                    rad_to_deg(cc.distribution.std), cc.svo_weight,
                    static_cast<unsigned long long>(cc.seed), cc.out_dir.c_str());
      out << line;
    }
    return 0;
  }

  fs::create_directories(spec.base.out_dir);
  std::string csv =
      "label,mean_deg,std_deg,weight,seed,status,rounds,collective_return,equality,"
      "median_return,quarantined,error\n";
  int failures = 0;
  for (size_t i = 0; i < cells.size(); ++i) {
    const RunConfig& cc = cells[i].config;
    std::string status = "ok", error;
    TrainArtifacts art;
    try {
      out << "cell " << i + 1 << "/" << cells.size() << ": " << cells[i].label << "\n";
      art = cmd_train(cc, false, out);
    } catch (const std::exception& e) {
      status = "failed";
      error = e.what();
      failures += 1;
      out << "cell " << cells[i].label << " failed: " << error << "\n";
    }
    csv += cells[i].label + "," + fmt_double(rad_to_deg(cc.distribution.mean)) + "," +
           fmt_double(rad_to_deg(cc.distribution.std)) + "," + fmt_double(cc.svo_weight) + "," +
           std::to_string(cc.seed) + "," + status + "," + std::to_string(art.rounds) + ",";
    if (art.has_window_metrics) {
      csv += fmt_double(art.window_collective);
      csv += ',';
      csv += fmt_double(art.window_equality);
      csv += ',';
      csv += fmt_double(art.window_median_return);
    } else {
      csv += ",,";
    }
    csv += "," + std::to_string(art.quarantined_total) + ",";
    // commas in error text would break the row
    for (char& ch : error) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    csv += error + "\n";
  }
  runner_detail::write_text(fs::path(spec.base.out_dir) / "sweep_summary.csv", csv);
  out << "sweep done: " << cells.size() - failures << "/" << cells.size() << " cells ok\n";
  return failures == 0 ? 0 : 3;
}

// --- replay --------------------------------------------------------------

inline int cmd_replay(const std::string& replay_path, const std::string& config_path,
                      const std::string& out_path, std::ostream& out) {
  const ReplayReader reader = ReplayReader::from_file(replay_path);
  const ReplayHeader& h = reader.header();
  RunConfig c = load_run_config(config_path);
  if (c.env != h.env) throw IntegrityError("replay: config environment does not match the log");
  const MapSpec map = load_map(c.map);
  if (map.hash() != h.map_hash) {
    throw IntegrityError("replay: map in " + c.map + " does not match the recorded map");
  }
  WorldConfig wc = c.world_config();
  wc.n_agents = h.n_agents;
  World world(map, wc, h.seed);

  std::string lines;
  for (int t = 0; t < reader.steps(); ++t) {
    const std::vector<Action> actions = reader.step_actions(t);
    const StepResult sr = world.step(actions);
    json row;
    row["step"] = t;
    json acts = json::array();
    for (Action a : actions) acts.push_back(static_cast<int>(a));
    row["actions"] = acts;
    row["rewards"] = sr.rewards;
    row["state_hash"] = runner_detail::hex64(world.state_hash());
    lines += row.dump() + "\n";
  }
  const uint64_t got = world.state_hash();
  json tail;
  tail["final_state_hash"] = runner_detail::hex64(got);
  tail["expected_final_state_hash"] = runner_detail::hex64(h.final_hash);
  tail["match"] = got == h.final_hash;
  lines += tail.dump() + "\n";
  if (out_path.empty()) {
    out << lines;
  } else {
    runner_detail::write_text(out_path, lines);
    out << "replay trace written: " << out_path << "\n";
  }
  if (got != h.final_hash) {
    throw IntegrityError("replay: final state hash mismatch (got " + runner_detail::hex64(got) +
                         ", expected " + runner_detail::hex64(h.final_hash) + ")");
  }
  out << "replay verified: " << reader.steps() << " steps, final state "
      << runner_detail::hex64(got) << "\n";
  return 0;
}

// --- export ----------------------------------------------------------------

inline int cmd_export(const std::vector<std::string>& run_dirs, const std::string& out_path,
                      std::ostream& out) {
  std::string csv =
      "run_dir,environment,mean_deg,std_deg,weight,seed,rounds,collective_return,"
      "equality,median_return\n";
  for (const std::string& dir : run_dirs) {
    const fs::path p = fs::path(dir) / "summary.json";
    if (!fs::exists(p)) throw ConfigError("export: no summary.json in " + dir);
    const json s = load_json_file(p.string());
    try {
      csv += dir + "," + s.at("environment").get<std::string>() + "," +
             fmt_double(s.at("mean_deg").get<double>()) + "," +
             fmt_double(s.at("std_deg").get<double>()) + "," +
             fmt_double(s.at("svo_weight").get<double>()) + "," +
             std::to_string(s.at("seed").get<uint64_t>()) + "," +
             std::to_string(s.at("rounds").get<int>()) + ",";
      if (s.contains("equilibrium_window")) {
        const json& w = s.at("equilibrium_window");
        csv += fmt_double(w.at("collective_return").get<double>()) + "," +
               fmt_double(w.at("equality").get<double>()) + "," +
               fmt_double(w.at("median_return").get<double>());
      } else {
        csv += ",,";
      }
      csv += "\n";
    } catch (const json::exception& e) {
      throw IntegrityError("export: bad summary.json in " + dir + ": " + e.what());
    }
  }
  if (out_path.empty()) {
    out << csv;
  } else {
    runner_detail::write_text(out_path, csv);
    out << "export written: " << out_path << "\n";
  }
  return 0;
}

}  // namespace svosim
