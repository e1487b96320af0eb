#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "svosim/grid.hpp"
#include "svosim/map.hpp"
#include "svosim/population.hpp"

extern char** environ;

namespace svosim {

using json = nlohmann::json;

// Schema note: all angles in config files are degrees; they are
// converted to radians on load and logs carry both units.

namespace config_detail {

inline void check_keys(const json& j, const std::string& section,
                       std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("config: '" + section + "' must be an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed) {
      if (item.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw ConfigError("config: unknown key '" + section + "." + item.key() + "'");
    }
  }
}

template <typename T>
T take(const json& j, const std::string& section, const char* key, T def) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config: bad value for '" + section + "." + key + "': " + e.what());
  }
}

}  // namespace config_detail

struct EvalParams {
  int episodes = 100;
  std::string policy_kind;  // empty = neural policies from a checkpoint
  uint64_t seed = 0;        // 0 = derive from the run seed
};

struct RunConfig {
  EnvKind env = EnvKind::HarvestPatch;
  std::string map = "builtin:harvestpatch";
  int episode_steps = 1000;
  uint64_t seed = 1;
  bool deterministic = true;
  int threads = 1;
  std::string out_dir = "runs/run";
  int arenas = 100;
  int rounds = 200;
  int checkpoint_every = 0;  // 0 = final checkpoint only

  double svo_weight = 0.2;
  double smoothing_lambda = 0.975;
  bool use_smoothing = true;

  int population_size = 30;
  int group_size = 5;
  SvoDistribution distribution;  // radians internally

  LearnerConfig learner;
  ArchSpec arch;  // observation dims/actions are derived, not configured
  HarvestParams harvest;
  CleanupParams cleanup;
  BeamParams beams;
  EvalParams eval;

  int effective_threads() const { return deterministic ? 1 : threads; }

  PopulationSpec population_spec() const {
    PopulationSpec p;
    p.population_size = population_size;
    p.group_size = group_size;
    p.distribution = distribution;
    p.weight = svo_weight;
    p.seed = seed;
    p.arch = arch;
    p.arch.obs_rows = kWindow;
    p.arch.obs_cols = kWindow;
    p.arch.obs_channels = 3;
    p.arch.extra_inputs = kOrientationInputs;
    p.arch.actions = action_count(env);
    return p;
  }

  WorldConfig world_config() const {
    WorldConfig w;
    w.kind = env;
    w.n_agents = group_size;
    w.beams = beams;
    w.harvest = harvest;
    w.cleanup = cleanup;
    return w;
  }

  TrainOptions train_options(MapSpec map_spec) const {
    TrainOptions t;
    t.map = std::move(map_spec);
    t.world = world_config();
    t.arenas = arenas;
    t.rounds = rounds;
    t.episode_steps = episode_steps;
    t.smoothing_lambda = smoothing_lambda;
    t.use_smoothing = use_smoothing;
    t.learner = learner;
    t.seed = seed;
    t.threads = effective_threads();
    return t;
  }

  void validate() const {
    population_spec().validate();
    learner.validate();
    if (episode_steps < 2) throw ConfigError("config: episode_steps must be >= 2");
    if (arenas < 1) throw ConfigError("config: arenas must be >= 1");
    if (rounds < 0) throw ConfigError("config: rounds must be >= 0");
    if (checkpoint_every < 0) throw ConfigError("config: checkpoint_every must be >= 0");
    if (threads < 1) throw ConfigError("config: threads must be >= 1");
    if (!(smoothing_lambda >= 0.0 && smoothing_lambda < 1.0)) {
      throw ConfigError("config: smoothing_lambda must lie in [0, 1)");
    }
    if (eval.episodes < 0) throw ConfigError("config: eval.episodes must be >= 0");
    if (!eval.policy_kind.empty()) scripted_kind_from_name(eval.policy_kind);
    if (out_dir.empty()) throw ConfigError("config: out_dir must not be empty");
  }
};

inline RunConfig run_config_from_json(const json& j) {
  using config_detail::check_keys;
  using config_detail::take;
  check_keys(j, "<root>",
             {"environment", "map", "episode_steps", "seed", "deterministic", "threads",
              "out_dir", "arenas", "rounds", "checkpoint_every", "svo", "population", "learner",
              "arch", "harvest", "cleanup", "beams", "eval"});
  RunConfig c;
  c.env = env_from_name(take<std::string>(j, "<root>", "environment", "harvestpatch"));
  c.map = take<std::string>(j, "<root>", "map",
                            c.env == EnvKind::HarvestPatch ? "builtin:harvestpatch"
                                                           : "builtin:cleanup");
  c.episode_steps = take<int>(j, "<root>", "episode_steps", 1000);
  c.seed = take<uint64_t>(j, "<root>", "seed", 1);
  c.deterministic = take<bool>(j, "<root>", "deterministic", true);
  c.threads = take<int>(j, "<root>", "threads", 1);
  c.out_dir = take<std::string>(j, "<root>", "out_dir", "runs/run");
  c.arenas = take<int>(j, "<root>", "arenas", 100);
  c.rounds = take<int>(j, "<root>", "rounds", 200);
  c.checkpoint_every = take<int>(j, "<root>", "checkpoint_every", 0);
  // environment-appropriate default weight: 0.2 harvest, 0.1 cleanup
  c.svo_weight = c.env == EnvKind::HarvestPatch ? 0.2 : 0.1;

  if (j.contains("svo")) {
    const json& s = j.at("svo");
    check_keys(s, "svo", {"weight", "smoothing_lambda", "use_smoothing"});
    c.svo_weight = take<double>(s, "svo", "weight", c.svo_weight);
    c.smoothing_lambda = take<double>(s, "svo", "smoothing_lambda", c.smoothing_lambda);
    c.use_smoothing = take<bool>(s, "svo", "use_smoothing", c.use_smoothing);
  }
  if (j.contains("population")) {
    const json& p = j.at("population");
    check_keys(p, "population", {"size", "group_size", "distribution", "mean_deg", "std_deg"});
    c.population_size = take<int>(p, "population", "size", c.population_size);
    c.group_size = take<int>(p, "population", "group_size", c.group_size);
    const std::string dist = take<std::string>(p, "population", "distribution", "homogeneous");
    if (dist == "homogeneous") {
      c.distribution.kind = SvoDistribution::Kind::Homogeneous;
    } else if (dist == "normal") {
      c.distribution.kind = SvoDistribution::Kind::Normal;
    } else {
      throw ConfigError("config: population.distribution must be 'homogeneous' or 'normal'");
    }
    c.distribution.mean = deg_to_rad(take<double>(p, "population", "mean_deg", 0.0));
    c.distribution.std = deg_to_rad(take<double>(p, "population", "std_deg", 0.0));
  }
  if (j.contains("learner")) {
    const json& l = j.at("learner");
    check_keys(l, "learner",
               {"gamma", "learning_rate", "entropy_coef", "value_coef", "max_grad_norm",
                "batch_size"});
    c.learner.gamma = take<double>(l, "learner", "gamma", c.learner.gamma);
    c.learner.learning_rate = take<double>(l, "learner", "learning_rate", c.learner.learning_rate);
    c.learner.entropy_coef = take<double>(l, "learner", "entropy_coef", c.learner.entropy_coef);
    c.learner.value_coef = take<double>(l, "learner", "value_coef", c.learner.value_coef);
    c.learner.max_grad_norm = take<double>(l, "learner", "max_grad_norm", c.learner.max_grad_norm);
    c.learner.batch_size = take<int>(l, "learner", "batch_size", c.learner.batch_size);
  }
  if (j.contains("arch")) {
    const json& a = j.at("arch");
    check_keys(a, "arch", {"conv_channels", "conv_kernel", "conv_stride", "hidden", "gru"});
    c.arch.conv_channels = take<int>(a, "arch", "conv_channels", c.arch.conv_channels);
    c.arch.conv_kernel = take<int>(a, "arch", "conv_kernel", c.arch.conv_kernel);
    c.arch.conv_stride = take<int>(a, "arch", "conv_stride", c.arch.conv_stride);
    c.arch.hidden = take<int>(a, "arch", "hidden", c.arch.hidden);
    c.arch.gru = take<int>(a, "arch", "gru", c.arch.gru);
  }
  if (j.contains("harvest")) {
    const json& h = j.at("harvest");
    check_keys(h, "harvest",
               {"regrowth_radius", "regrowth_probabilities", "initial_spawn_prob", "l1_distance"});
    c.harvest.regrowth_radius = take<double>(h, "harvest", "regrowth_radius",
                                             c.harvest.regrowth_radius);
    c.harvest.regrowth_probabilities = take<std::vector<double>>(
        h, "harvest", "regrowth_probabilities", c.harvest.regrowth_probabilities);
    c.harvest.initial_spawn_prob = take<double>(h, "harvest", "initial_spawn_prob",
                                                c.harvest.initial_spawn_prob);
    c.harvest.l1_distance = take<bool>(h, "harvest", "l1_distance", c.harvest.l1_distance);
  }
  if (j.contains("cleanup")) {
    const json& u = j.at("cleanup");
    check_keys(u, "cleanup",
               {"pollution_spawn_prob", "depletion_threshold", "max_spawn_prob",
                "stepwise_growth", "initial_polluted_fraction", "initial_apple_prob"});
    c.cleanup.pollution_spawn_prob = take<double>(u, "cleanup", "pollution_spawn_prob",
                                                  c.cleanup.pollution_spawn_prob);
    c.cleanup.depletion_threshold = take<double>(u, "cleanup", "depletion_threshold",
                                                 c.cleanup.depletion_threshold);
    c.cleanup.max_spawn_prob = take<double>(u, "cleanup", "max_spawn_prob",
                                            c.cleanup.max_spawn_prob);
    c.cleanup.stepwise_growth = take<bool>(u, "cleanup", "stepwise_growth",
                                           c.cleanup.stepwise_growth);
    c.cleanup.initial_polluted_fraction = take<double>(u, "cleanup", "initial_polluted_fraction",
                                                       c.cleanup.initial_polluted_fraction);
    c.cleanup.initial_apple_prob = take<double>(u, "cleanup", "initial_apple_prob",
                                                c.cleanup.initial_apple_prob);
  }
  if (j.contains("beams")) {
    const json& b = j.at("beams");
    check_keys(b, "beams",
               {"punish_length", "clean_length", "punish_reward", "punish_cost", "apple_reward",
                "punish_timeout"});
    c.beams.punish_length = take<int>(b, "beams", "punish_length", c.beams.punish_length);
    c.beams.clean_length = take<int>(b, "beams", "clean_length", c.beams.clean_length);
    c.beams.punish_reward = take<int>(b, "beams", "punish_reward", c.beams.punish_reward);
    c.beams.punish_cost = take<int>(b, "beams", "punish_cost", c.beams.punish_cost);
    c.beams.apple_reward = take<int>(b, "beams", "apple_reward", c.beams.apple_reward);
    c.beams.punish_timeout = take<int>(b, "beams", "punish_timeout", c.beams.punish_timeout);
  }
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    check_keys(e, "eval", {"episodes", "policy_kind", "seed"});
    c.eval.episodes = take<int>(e, "eval", "episodes", c.eval.episodes);
    c.eval.policy_kind = take<std::string>(e, "eval", "policy_kind", c.eval.policy_kind);
    c.eval.seed = take<uint64_t>(e, "eval", "seed", c.eval.seed);
  }
  c.validate();
  return c;
}

inline json run_config_to_json(const RunConfig& c) {
  json j;
  j["environment"] = env_name(c.env);
  j["map"] = c.map;
  j["episode_steps"] = c.episode_steps;
  j["seed"] = c.seed;
  j["deterministic"] = c.deterministic;
  j["threads"] = c.threads;
  j["out_dir"] = c.out_dir;
  j["arenas"] = c.arenas;
  j["rounds"] = c.rounds;
  j["checkpoint_every"] = c.checkpoint_every;
  j["svo"] = {{"weight", c.svo_weight},
              {"smoothing_lambda", c.smoothing_lambda},
              {"use_smoothing", c.use_smoothing}};
  j["population"] = {
      {"size", c.population_size},
      {"group_size", c.group_size},
      {"distribution",
       c.distribution.kind == SvoDistribution::Kind::Normal ? "normal" : "homogeneous"},
      {"mean_deg", rad_to_deg(c.distribution.mean)},
      {"std_deg", rad_to_deg(c.distribution.std)}};
  j["learner"] = {{"gamma", c.learner.gamma},
                  {"learning_rate", c.learner.learning_rate},
                  {"entropy_coef", c.learner.entropy_coef},
                  {"value_coef", c.learner.value_coef},
                  {"max_grad_norm", c.learner.max_grad_norm},
                  {"batch_size", c.learner.batch_size}};
  j["arch"] = {{"conv_channels", c.arch.conv_channels},
               {"conv_kernel", c.arch.conv_kernel},
               {"conv_stride", c.arch.conv_stride},
               {"hidden", c.arch.hidden},
               {"gru", c.arch.gru}};
  j["harvest"] = {{"regrowth_radius", c.harvest.regrowth_radius},
                  {"regrowth_probabilities", c.harvest.regrowth_probabilities},
                  {"initial_spawn_prob", c.harvest.initial_spawn_prob},
                  {"l1_distance", c.harvest.l1_distance}};
  j["cleanup"] = {{"pollution_spawn_prob", c.cleanup.pollution_spawn_prob},
                  {"depletion_threshold", c.cleanup.depletion_threshold},
                  {"max_spawn_prob", c.cleanup.max_spawn_prob},
                  {"stepwise_growth", c.cleanup.stepwise_growth},
                  {"initial_polluted_fraction", c.cleanup.initial_polluted_fraction},
                  {"initial_apple_prob", c.cleanup.initial_apple_prob}};
  j["beams"] = {{"punish_length", c.beams.punish_length},
                {"clean_length", c.beams.clean_length},
                {"punish_reward", c.beams.punish_reward},
                {"punish_cost", c.beams.punish_cost},
                {"apple_reward", c.beams.apple_reward},
                {"punish_timeout", c.beams.punish_timeout}};
  j["eval"] = {{"episodes", c.eval.episodes},
               {"policy_kind", c.eval.policy_kind},
               {"seed", c.eval.seed}};
  return j;
}

// Environment overrides: SVOSIM_<PATH>=<value> where "__" separates
// nesting levels, e.g. SVOSIM_LEARNER__GAMMA=0.95 sets learner.gamma.
// Values parse as JSON when possible, otherwise as strings. Typos
// surface through the strict unknown-key check afterwards.
inline void apply_env_overrides(json& j, const std::string& prefix = "SVOSIM_") {
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    const std::string entry(*e);
    if (entry.rfind(prefix, 0) != 0) continue;
    const size_t eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string path = entry.substr(prefix.size(), eq - prefix.size());
    const std::string raw = entry.substr(eq + 1);
    std::transform(path.begin(), path.end(), path.begin(),
                   [](unsigned char ch) { return std::tolower(ch); });
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;
    }
    json* node = &j;
    size_t start = 0;
    while (true) {
      const size_t sep = path.find("__", start);
      const std::string key = path.substr(start, sep == std::string::npos ? sep : sep - start);
      if (key.empty()) throw ConfigError("config: malformed override variable " + entry);
      if (sep == std::string::npos) {
        (*node)[key] = value;
        break;
      }
      node = &(*node)[key];
      start = sep + 2;
    }
  }
}

inline json load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
}

inline RunConfig load_run_config(const std::string& path, bool with_env_overrides = true) {
  json j = load_json_file(path);
  if (with_env_overrides) apply_env_overrides(j);
  return run_config_from_json(j);
}

// --- sweeps ------------------------------------------------------------

struct SweepCell {
  RunConfig config;
  std::string label;
};

// Either a (mean x std x seed) grid of heterogeneous populations or a
// (weight x seed) grid; exactly one mode must be present.
struct SweepSpec {
  RunConfig base;
  std::vector<double> mean_deg;
  std::vector<double> std_deg;
  std::vector<double> weights;
  std::vector<uint64_t> seeds;

  void validate() const {
    const bool svo_grid = !mean_deg.empty() || !std_deg.empty();
    const bool weight_grid = !weights.empty();
    if (svo_grid && weight_grid) {
      throw ConfigError("sweep: give either an svo grid or a weight grid, not both");
    }
    if (!svo_grid && !weight_grid) throw ConfigError("sweep: empty grid");
    if (svo_grid && (mean_deg.empty() || std_deg.empty())) {
      throw ConfigError("sweep: svo grid needs both mean_deg and std_deg");
    }
    if (seeds.empty()) throw ConfigError("sweep: needs at least one seed");
  }

  std::vector<SweepCell> enumerate() const {
    validate();
    std::vector<SweepCell> cells;
    char label[96];
    if (!weights.empty()) {
      for (double w : weights) {
        for (uint64_t s : seeds) {
          SweepCell cell;
          cell.config = base;
          cell.config.svo_weight = w;
          cell.config.seed = s;
          std::snprintf(label, sizeof(label), "w%g_seed%llu", w,
                        static_cast<unsigned long long>(s));
          cell.label = label;
          cell.config.out_dir = base.out_dir + "/" + cell.label;
          cells.push_back(std::move(cell));
        }
      }
      return cells;
    }
    for (double m : mean_deg) {
      for (double sd : std_deg) {
        for (uint64_t s : seeds) {
          SweepCell cell;
          cell.config = base;
          cell.config.distribution.kind = SvoDistribution::Kind::Normal;
          cell.config.distribution.mean = deg_to_rad(m);
          cell.config.distribution.std = deg_to_rad(sd);
          cell.config.seed = s;
          std::snprintf(label, sizeof(label), "m%g_s%g_seed%llu", m, sd,
                        static_cast<unsigned long long>(s));
          cell.label = label;
          cell.config.out_dir = base.out_dir + "/" + cell.label;
          cells.push_back(std::move(cell));
        }
      }
    }
    return cells;
  }
};

inline SweepSpec sweep_spec_from_json(const json& j) {
  using config_detail::check_keys;
  using config_detail::take;
  check_keys(j, "<root>", {"base", "grid", "weight_grid"});
  if (!j.contains("base")) throw ConfigError("sweep: missing 'base' run config");
  SweepSpec s;
  s.base = run_config_from_json(j.at("base"));
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    check_keys(g, "grid", {"mean_deg", "std_deg", "seeds"});
    s.mean_deg = take<std::vector<double>>(g, "grid", "mean_deg", {});
    s.std_deg = take<std::vector<double>>(g, "grid", "std_deg", {});
    s.seeds = take<std::vector<uint64_t>>(g, "grid", "seeds", {});
  }
  if (j.contains("weight_grid")) {
    const json& g = j.at("weight_grid");
    check_keys(g, "weight_grid", {"weights", "seeds"});
    s.weights = take<std::vector<double>>(g, "weight_grid", "weights", {});
    const auto extra = take<std::vector<uint64_t>>(g, "weight_grid", "seeds", {});
    s.seeds.insert(s.seeds.end(), extra.begin(), extra.end());
  }
  s.validate();
  return s;
}

inline SweepSpec load_sweep_spec(const std::string& path, bool with_env_overrides = true) {
  json j = load_json_file(path);
  if (with_env_overrides) {
    if (j.contains("base") && j.at("base").is_object()) {
      json base = j.at("base");
      apply_env_overrides(base);
      j["base"] = base;
    }
  }
  return sweep_spec_from_json(j);
}

}  // namespace svosim
