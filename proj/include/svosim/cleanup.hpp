#pragma once

#include <algorithm>
#include <vector>

#include "svosim/common.hpp"
#include "svosim/map.hpp"
#include "svosim/rng.hpp"

namespace svosim {

struct CleanupParams {
  double pollution_spawn_prob = 0.5;
  double depletion_threshold = 0.4;   // pollution fraction at which growth stops
  double max_spawn_prob = 0.05;       // per-cell per-step apple growth at a clean river
  bool stepwise_growth = false;       // false: linear in pollution below threshold
  double initial_polluted_fraction = 1.0;
  double initial_apple_prob = 0.3;
};

// River pollution state. Pollution arrives one cell per step with a
// constant probability and leaves only through cleaning beams.
class RiverState {
 public:
  RiverState() = default;

  RiverState(const MapSpec& map, const CleanupParams& params) : params_(params) {
    cells_ = map.river_cells;
    polluted_.assign(cells_.size(), 0);
    cell_index_.assign(map.height * map.width, -1);
    for (int i = 0; i < static_cast<int>(cells_.size()); ++i) {
      cell_index_[map.index(cells_[i])] = i;
    }
    width_ = map.width;
    map_cells_ = map.height * map.width;
  }

  void spawn_initial(Rng& rng) {
    const int target = static_cast<int>(std::lround(params_.initial_polluted_fraction *
                                                    static_cast<double>(cells_.size())));
    std::fill(polluted_.begin(), polluted_.end(), 0);
    polluted_count_ = 0;
    if (target >= static_cast<int>(cells_.size())) {
      std::fill(polluted_.begin(), polluted_.end(), 1);
      polluted_count_ = static_cast<int>(cells_.size());
      return;
    }
    const auto chosen = rng.sample_without_replacement(static_cast<int>(cells_.size()), target);
    for (int i : chosen) polluted_[i] = 1;
    polluted_count_ = target;
  }

  // With probability pollution_spawn_prob, one uniformly random clean
  // river cell becomes polluted. Saturated rivers are left unchanged.
  void pollute(Rng& rng) {
    if (polluted_count_ >= static_cast<int>(cells_.size())) return;
    if (!rng.bernoulli(params_.pollution_spawn_prob)) return;
    const int clean_count = static_cast<int>(cells_.size()) - polluted_count_;
    int pick = static_cast<int>(rng.bounded(static_cast<uint32_t>(clean_count)));
    for (size_t i = 0; i < cells_.size(); ++i) {
      if (polluted_[i]) continue;
      if (pick == 0) {
        polluted_[i] = 1;
        polluted_count_ += 1;
        return;
      }
      --pick;
    }
  }

  // Cleans every polluted river cell among `cells`; returns the number
  // removed (the firing agent's contribution increment).
  int clean(const std::vector<Pos>& beam_cells) {
    int removed = 0;
    for (const Pos& p : beam_cells) {
      const int i = index_of(p);
      if (i >= 0 && polluted_[i]) {
        polluted_[i] = 0;
        polluted_count_ -= 1;
        ++removed;
      }
    }
    return removed;
  }

  double pollution_fraction() const {
    if (cells_.empty()) return 0.0;
    return static_cast<double>(polluted_count_) / static_cast<double>(cells_.size());
  }

  bool polluted_at(const Pos& p) const {
    const int i = index_of(p);
    return i >= 0 && polluted_[i] != 0;
  }

  int polluted_count() const { return polluted_count_; }
  int cell_count() const { return static_cast<int>(cells_.size()); }
  const std::vector<Pos>& cells() const { return cells_; }
  const CleanupParams& params() const { return params_; }

  void hash_into(Hasher& h) const { h.bytes(polluted_.data(), polluted_.size()); }

 private:
  int index_of(const Pos& p) const {
    const int idx = p.row * width_ + p.col;
    if (idx < 0 || idx >= map_cells_) return -1;
    return cell_index_[idx];
  }

  CleanupParams params_;
  std::vector<Pos> cells_;
  std::vector<uint8_t> polluted_;
  std::vector<int> cell_index_;
  int polluted_count_ = 0;
  int width_ = 0;
  int map_cells_ = 0;
};

// Per-cell per-step apple spawn probability given the river state.
// Linear mode interpolates from max_spawn_prob at a clean river down to
// exactly zero at the depletion threshold; stepwise mode is flat below
// the threshold.
inline double orchard_growth_rate(const RiverState& river) {
  const auto& p = river.params();
  const double fraction = river.pollution_fraction();
  if (fraction >= p.depletion_threshold) return 0.0;
  if (p.stepwise_growth) return p.max_spawn_prob;
  return p.max_spawn_prob * (1.0 - fraction / p.depletion_threshold);
}

class OrchardState {
 public:
  OrchardState() = default;

  OrchardState(const MapSpec& map, const CleanupParams& params) : params_(params) {
    cells_ = map.orchard_cells;
    apple_.assign(cells_.size(), 0);
    cell_index_.assign(map.height * map.width, -1);
    for (int i = 0; i < static_cast<int>(cells_.size()); ++i) {
      cell_index_[map.index(cells_[i])] = i;
    }
    width_ = map.width;
    map_cells_ = map.height * map.width;
  }

  void spawn_initial(Rng& rng) {
    apple_count_ = 0;
    for (size_t i = 0; i < cells_.size(); ++i) {
      apple_[i] = rng.bernoulli(params_.initial_apple_prob) ? 1 : 0;
      apple_count_ += apple_[i];
    }
  }

  // Each empty orchard cell gains an apple independently with
  // probability `rate`.
  void grow(double rate, Rng& rng) {
    if (rate <= 0.0) return;
    for (size_t i = 0; i < cells_.size(); ++i) {
      if (apple_[i]) continue;
      if (rng.bernoulli(rate)) {
        apple_[i] = 1;
        apple_count_ += 1;
      }
    }
  }

  bool apple_at(const Pos& p) const {
    const int i = index_of(p);
    return i >= 0 && apple_[i] != 0;
  }

  int harvest(const Pos& p) {
    const int i = index_of(p);
    if (i < 0 || !apple_[i]) return 0;
    apple_[i] = 0;
    apple_count_ -= 1;
    return 1;
  }

  int apple_count() const { return apple_count_; }
  const std::vector<Pos>& cells() const { return cells_; }

  void hash_into(Hasher& h) const { h.bytes(apple_.data(), apple_.size()); }

 private:
  int index_of(const Pos& p) const {
    const int idx = p.row * width_ + p.col;
    if (idx < 0 || idx >= map_cells_) return -1;
    return cell_index_[idx];
  }

  CleanupParams params_;
  std::vector<Pos> cells_;
  std::vector<uint8_t> apple_;
  std::vector<int> cell_index_;
  int apple_count_ = 0;
  int width_ = 0;
  int map_cells_ = 0;
};

}  // namespace svosim
