#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "svosim/episode.hpp"
#include "svosim/svo.hpp"

namespace svosim {

struct EqualityResult {
  double score = 1.0;
  bool shifted = false;  // returns were shifted by their minimum (negatives present)
};

// Equality = 1 - n/(n-1) * Gini, clamped to [0,1]: 0 when a single
// agent earns everything, 1 when all agents earn the same positive
// amount. Gini is undefined for negative values, so episodes with any
// negative return are shifted by their minimum and flagged.
inline EqualityResult equality(const RewardVector& returns) {
  const size_t n = returns.size();
  if (n < 2) throw std::invalid_argument("equality: need at least two agents");
  EqualityResult out;
  RewardVector r = returns;
  double mn = r[0];
  for (double v : r) mn = std::min(mn, v);
  if (mn < 0.0) {
    for (double& v : r) v -= mn;
    out.shifted = true;
  }
  double sum = 0.0;
  for (double v : r) sum += v;
  if (sum == 0.0) {
    out.score = 1.0;  // everyone earned the same (nothing)
    return out;
  }
  const double mean = sum / static_cast<double>(n);
  double abs_diff = 0.0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) abs_diff += std::fabs(r[i] - r[j]);
  }
  const double gini = abs_diff / (2.0 * static_cast<double>(n) * static_cast<double>(n) * mean);
  const double score = 1.0 - (static_cast<double>(n) / static_cast<double>(n - 1)) * gini;
  out.score = std::clamp(score, 0.0, 1.0);
  return out;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty input");
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Which trailing rounds of a training run count as "at equilibrium".
struct EquilibriumWindow {
  enum class Rule { TrailingFraction, Plateau };
  Rule rule = Rule::TrailingFraction;
  double trailing_fraction = 0.10;
  double plateau_slope_tol = 0.5;  // max |per-round slope| of the window
  int min_rounds = 2;

  // First round index included, given the per-round return series.
  int resolve_start(const std::vector<double>& series) const {
    const int n = static_cast<int>(series.size());
    if (n < 1) throw std::invalid_argument("equilibrium window: empty series");
    if (rule == Rule::TrailingFraction) {
      int count = static_cast<int>(std::ceil(trailing_fraction * n));
      count = std::clamp(count, std::min(min_rounds, n), n);
      return n - count;
    }
    // Plateau: grow the window backward from the end while its least-
    // squares slope stays within tolerance.
    const int min_w = std::min(std::max(min_rounds, 2), n);
    int start = n - min_w;
    for (int s = n - min_w; s >= 0; --s) {
      if (std::fabs(ols_slope(series, s, n)) <= plateau_slope_tol) {
        start = s;
      } else {
        break;
      }
    }
    return start;
  }

  static double ols_slope(const std::vector<double>& y, int begin, int end) {
    const int m = end - begin;
    if (m < 2) return 0.0;
    double sx = 0.0, sy = 0.0;
    for (int i = 0; i < m; ++i) {
      sx += i;
      sy += y[begin + i];
    }
    const double mx = sx / m, my = sy / m;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < m; ++i) {
      num += (i - mx) * (y[begin + i] - my);
      den += (i - mx) * (i - mx);
    }
    return den == 0.0 ? 0.0 : num / den;
  }
};

// One episode-level observation for the equilibrium analysis.
struct EpisodeEntry {
  int round = 0;
  int agent_id = 0;
  double extrinsic = 0.0;
};

// Median over agents of each agent's mean per-episode extrinsic return
// within the equilibrium window. The plateau rule is resolved on the
// per-round mean return across all entries.
inline double median_return(const std::vector<EpisodeEntry>& log, int total_rounds,
                            const EquilibriumWindow& window) {
  if (log.empty() || total_rounds < 1) throw std::invalid_argument("median_return: empty log");
  std::vector<double> round_sum(total_rounds, 0.0);
  std::vector<int> round_count(total_rounds, 0);
  for (const auto& e : log) {
    if (e.round < 0 || e.round >= total_rounds) {
      throw std::invalid_argument("median_return: round out of range");
    }
    round_sum[e.round] += e.extrinsic;
    round_count[e.round] += 1;
  }
  std::vector<double> series(total_rounds, 0.0);
  for (int r = 0; r < total_rounds; ++r) {
    series[r] = round_count[r] > 0 ? round_sum[r] / round_count[r] : 0.0;
  }
  const int start = window.resolve_start(series);

  // group by agent within the window
  std::vector<int> ids;
  for (const auto& e : log) {
    if (e.round >= start) ids.push_back(e.agent_id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.empty()) throw std::invalid_argument("median_return: window contains no episodes");
  std::vector<double> means;
  means.reserve(ids.size());
  for (int id : ids) {
    double sum = 0.0;
    int count = 0;
    for (const auto& e : log) {
      if (e.round >= start && e.agent_id == id) {
        sum += e.extrinsic;
        count += 1;
      }
    }
    means.push_back(sum / count);
  }
  return median(std::move(means));
}

// Reward angle of the episode-total extrinsic returns from one agent's
// perspective; missing when both its own total and the others' mean
// are exactly zero.
inline std::optional<double> observed_reward_angle(const EpisodeRecord& rec, int agent) {
  const RewardVector totals = rec.extrinsic_totals();
  if (agent < 0 || agent >= rec.n_agents) throw std::out_of_range("reward angle: bad agent");
  double others = 0.0;
  for (int i = 0; i < rec.n_agents; ++i) {
    if (i != agent) others += totals[i];
  }
  const double others_mean =
      rec.n_agents > 1 ? others / static_cast<double>(rec.n_agents - 1) : 0.0;
  if (totals[agent] == 0.0 && others_mean == 0.0) return std::nullopt;
  return std::atan2(others_mean, totals[agent]);
}

// Endangered-apple abstention. Each consumption event at step t (0-
// based) costs (T-1-t) / ((T-1) * P): eating one endangered apple from
// every patch at step 0 scores exactly 0, a single endangered apple on
// the final step still scores exactly 1, and no events score 1.
// Normalization anchored on those boundary conditions; see README.
inline double abstention(const EpisodeRecord& rec, int agent) {
  if (rec.kind != EnvKind::HarvestPatch) {
    throw std::invalid_argument("abstention: not a harvestpatch episode");
  }
  if (rec.patch_count <= 0) throw ConfigError("abstention: episode has no patches");
  if (rec.steps < 2) throw ConfigError("abstention: episode too short");
  const double denom = static_cast<double>(rec.steps - 1) * rec.patch_count;
  double penalty = 0.0;
  for (const auto& e : rec.endangered) {
    if (e.agent_id != agent) continue;
    penalty += static_cast<double>(rec.steps - 1 - e.step) / denom;
  }
  return std::clamp(1.0 - penalty, 0.0, 1.0);
}

// Mean over steps of the Euclidean distance to the nearest other
// avatar. Undefined for single-agent episodes.
inline std::optional<double> interagent_distance(const EpisodeRecord& rec, int agent) {
  if (rec.n_agents < 2) return std::nullopt;
  if (agent < 0 || agent >= rec.n_agents) throw std::out_of_range("distance: bad agent");
  double sum = 0.0;
  for (const auto& row : rec.positions) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < rec.n_agents; ++i) {
      if (i == agent) continue;
      best = std::min(best, euclidean(row[agent], row[i]));
    }
    sum += best;
  }
  return sum / static_cast<double>(rec.positions.size());
}

inline int pollution_cleaned(const EpisodeRecord& rec, int agent) {
  int total = 0;
  for (const auto& e : rec.cleaning) {
    if (e.agent_id == agent) total += e.cells;
  }
  return total;
}

struct Preparedness {
  int transitions = 0;
  double mean_apples = 0.0;
};

// Mean apples-in-view at the agent's harvest-to-clean transitions;
// missing when the agent never transitioned.
inline std::optional<Preparedness> preparedness(const EpisodeRecord& rec, int agent) {
  Preparedness out;
  double sum = 0.0;
  for (const auto& e : rec.transitions) {
    if (e.agent_id != agent) continue;
    out.transitions += 1;
    sum += e.apples_in_view;
  }
  if (out.transitions == 0) return std::nullopt;
  out.mean_apples = sum / out.transitions;
  return out;
}

inline double collective_return(const EpisodeRecord& rec) {
  double sum = 0.0;
  for (double v : rec.extrinsic_totals()) sum += v;
  return sum;
}

// Everything §-level reporting needs from one episode.
struct EpisodeMetrics {
  RewardVector returns;
  RewardVector utility_returns;
  double collective = 0.0;
  double equality_score = 1.0;
  bool equality_shifted = false;
  std::vector<std::optional<double>> reward_angle;
  std::vector<std::optional<double>> abstention_score;   // HarvestPatch only
  std::vector<std::optional<double>> nn_distance;
  std::vector<int> cleaned;                              // Cleanup only
  std::vector<std::optional<Preparedness>> prepared;     // Cleanup only
  std::vector<int> punish_fired;
};

inline EpisodeMetrics compute_episode_metrics(const EpisodeRecord& rec) {
  EpisodeMetrics m;
  m.returns = rec.extrinsic_totals();
  m.utility_returns = rec.utility_totals();
  m.collective = 0.0;
  for (double v : m.returns) m.collective += v;
  if (rec.n_agents >= 2) {
    const EqualityResult eq = equality(m.returns);
    m.equality_score = eq.score;
    m.equality_shifted = eq.shifted;
  }
  m.reward_angle.resize(rec.n_agents);
  m.abstention_score.resize(rec.n_agents);
  m.nn_distance.resize(rec.n_agents);
  m.cleaned.assign(rec.n_agents, 0);
  m.prepared.resize(rec.n_agents);
  m.punish_fired = rec.punish_fired;
  for (int i = 0; i < rec.n_agents; ++i) {
    m.reward_angle[i] = observed_reward_angle(rec, i);
    if (rec.kind == EnvKind::HarvestPatch) {
      m.abstention_score[i] = abstention(rec, i);
    } else {
      m.cleaned[i] = pollution_cleaned(rec, i);
      m.prepared[i] = preparedness(rec, i);
    }
    m.nn_distance[i] = interagent_distance(rec, i);
  }
  return m;
}

// --- CSV helpers -------------------------------------------------------

inline std::string metrics_csv_header() {
  return "episode,agent_id,theta_svo_deg,extrinsic_return,utility_return,collective_return,"
         "equality,equality_shifted,reward_angle_rad,abstention,nn_distance,"
         "pollution_cleaned,prep_transitions,prep_mean_apples,punish_fired";
}

inline void append_csv_field(std::string& row, const std::optional<double>& v) {
  row.push_back(',');
  if (v.has_value()) row += fmt_double(*v);
}

// agent_label is what the agent_id column shows (e.g. a population
// member id); agent indexes the per-slot arrays of this episode.
inline std::string metrics_csv_row(int episode, int agent_label, int agent, double theta_deg,
                                   const EpisodeMetrics& m) {
  std::string row;
  row += std::to_string(episode);
  row += ',';
  row += std::to_string(agent_label);
  row += ',';
  row += fmt_double(theta_deg);
  row += ',';
  row += fmt_double(m.returns[agent]);
  row += ',';
  row += fmt_double(m.utility_returns[agent]);
  row += ',';
  row += fmt_double(m.collective);
  row += ',';
  row += fmt_double(m.equality_score);
  row += ',';
  row += m.equality_shifted ? "1" : "0";
  append_csv_field(row, m.reward_angle[agent]);
  append_csv_field(row, m.abstention_score[agent]);
  append_csv_field(row, m.nn_distance[agent]);
  row += ',';
  row += std::to_string(m.cleaned[agent]);
  row += ',';
  if (m.prepared[agent].has_value()) row += std::to_string(m.prepared[agent]->transitions);
  row += ',';
  if (m.prepared[agent].has_value()) row += fmt_double(m.prepared[agent]->mean_apples);
  row += ',';
  row += std::to_string(m.punish_fired[agent]);
  return row;
}

}  // namespace svosim
