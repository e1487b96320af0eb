#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "svosim/common.hpp"
#include "svosim/map.hpp"
#include "svosim/rng.hpp"

namespace svosim {

struct HarvestParams {
  double regrowth_radius = 3.0;
  // Indexed by live-neighbor count; the last entry covers all larger
  // counts. Default bands: 0 -> 0, 1-2 -> 0.01, 3-5 -> 0.05, >=6 -> 0.10.
  std::vector<double> regrowth_probabilities = {0.0, 0.01, 0.01, 0.05, 0.05, 0.05, 0.10};
  double initial_spawn_prob = 0.8;
  bool l1_distance = false;  // Euclidean by default

  double regrowth_prob_for(int live_neighbors) const {
    if (regrowth_probabilities.empty()) return 0.0;
    const size_t i = std::min<size_t>(live_neighbors, regrowth_probabilities.size() - 1);
    return regrowth_probabilities[i];
  }
};

struct Patch {
  int patch_id = 0;
  std::vector<int> site_indices;  // into PatchMap::sites
  int live_count = 0;
  bool depleted = false;
};

// Patch-structured apple stock. Sites are fixed by the map; apples on
// them come and go. A patch whose live count reaches zero is depleted
// for the rest of the episode: with no live apples inside the regrowth
// radius, nothing can respawn there.
class PatchMap {
 public:
  PatchMap() = default;

  PatchMap(const MapSpec& map, const HarvestParams& params) : params_(params) {
    patches_.resize(map.patch_sites.size());
    for (int pid = 0; pid < static_cast<int>(map.patch_sites.size()); ++pid) {
      patches_[pid].patch_id = pid;
      for (const Pos& p : map.patch_sites[pid]) {
        patches_[pid].site_indices.push_back(static_cast<int>(sites_.size()));
        sites_.push_back(p);
        site_patch_.push_back(pid);
      }
    }
    live_.assign(sites_.size(), 0);
    validate_radius_invariant();
    build_neighbor_lists();
    site_at_.assign(map.height * map.width, -1);
    for (int i = 0; i < static_cast<int>(sites_.size()); ++i) {
      site_at_[map.index(sites_[i])] = i;
    }
    width_ = map.width;
  }

  // Every site must be within regrowth_radius of all sites in its own
  // patch and strictly farther from every site of every other patch.
  void validate_radius_invariant() const {
    for (size_t i = 0; i < sites_.size(); ++i) {
      for (size_t j = i + 1; j < sites_.size(); ++j) {
        const double d = distance(sites_[i], sites_[j]);
        if (site_patch_[i] == site_patch_[j]) {
          if (d > params_.regrowth_radius) {
            throw ConfigError("patch " + std::to_string(site_patch_[i]) +
                              " has sites farther apart than the regrowth radius");
          }
        } else if (d <= params_.regrowth_radius) {
          throw ConfigError("patches " + std::to_string(site_patch_[i]) + " and " +
                            std::to_string(site_patch_[j]) +
                            " have sites within the regrowth radius of each other");
        }
      }
    }
  }

  // Each site independently starts with an apple with probability
  // initial_spawn_prob; a patch that draws zero apples is re-drawn so no
  // patch begins the episode depleted.
  void spawn_initial(Rng& rng) {
    for (auto& patch : patches_) {
      patch.depleted = false;
      do {
        patch.live_count = 0;
        for (int s : patch.site_indices) {
          live_[s] = rng.bernoulli(params_.initial_spawn_prob) ? 1 : 0;
          patch.live_count += live_[s];
        }
      } while (patch.live_count == 0);
    }
  }

  bool apple_at(const Pos& p) const {
    const int s = site_index(p);
    return s >= 0 && live_[s] != 0;
  }

  // Removes the apple at `p` if present. Returns the reward (+1, or 0
  // when there is no apple) and reports whether the consumed apple was
  // the last live apple of its patch.
  int harvest(const Pos& p, bool* was_endangered = nullptr, int* patch_id = nullptr) {
    const int s = site_index(p);
    if (was_endangered) *was_endangered = false;
    if (patch_id) *patch_id = -1;
    if (s < 0 || live_[s] == 0) return 0;
    Patch& patch = patches_[site_patch_[s]];
    if (was_endangered) *was_endangered = (patch.live_count == 1);
    if (patch_id) *patch_id = patch.patch_id;
    live_[s] = 0;
    patch.live_count -= 1;
    if (patch.live_count == 0) patch.depleted = true;
    return 1;
  }

  // One regrowth pass. Live-neighbor counts are taken from the state at
  // entry, so apples spawned within the same pass do not feed each other.
  void regrow(Rng& rng) {
    scratch_counts_.assign(sites_.size(), 0);
    for (size_t s = 0; s < sites_.size(); ++s) {
      if (live_[s]) continue;
      int k = 0;
      for (int nb : neighbors_[s]) k += live_[nb];
      scratch_counts_[s] = k;
    }
    for (size_t s = 0; s < sites_.size(); ++s) {
      if (live_[s] || patches_[site_patch_[s]].depleted) continue;
      const int k = scratch_counts_[s];
      if (k == 0) continue;  // nothing within the radius, cannot regrow
      if (rng.bernoulli(params_.regrowth_prob_for(k))) {
        live_[s] = 1;
        patches_[site_patch_[s]].live_count += 1;
      }
    }
  }

  // Positions of apples that are the sole live apple of their patch.
  std::vector<Pos> endangered_sites() const {
    std::vector<Pos> out;
    for (const auto& patch : patches_) {
      if (patch.live_count != 1) continue;
      for (int s : patch.site_indices) {
        if (live_[s]) out.push_back(sites_[s]);
      }
    }
    return out;
  }

  bool endangered_at(const Pos& p) const {
    const int s = site_index(p);
    return s >= 0 && live_[s] && patches_[site_patch_[s]].live_count == 1;
  }

  // Live count of the patch containing p; 0 when p is not a patch site.
  int live_count_at(const Pos& p) const {
    const int s = site_index(p);
    return s >= 0 ? patches_[site_patch_[s]].live_count : 0;
  }

  int total_live() const {
    int n = 0;
    for (const auto& p : patches_) n += p.live_count;
    return n;
  }

  const std::vector<Patch>& patches() const { return patches_; }
  const std::vector<Pos>& sites() const { return sites_; }
  bool site_live(int i) const { return live_[i] != 0; }
  int patch_count() const { return static_cast<int>(patches_.size()); }
  const HarvestParams& params() const { return params_; }

  void hash_into(Hasher& h) const {
    h.bytes(live_.data(), live_.size());
    for (const auto& p : patches_) {
      h.i32(p.live_count);
      h.pod(p.depleted);
    }
  }

 private:
  double distance(const Pos& a, const Pos& b) const {
    return params_.l1_distance ? static_cast<double>(manhattan(a, b)) : euclidean(a, b);
  }

  int site_index(const Pos& p) const {
    if (p.col < 0 || p.col >= width_ || p.row < 0) return -1;
    const int idx = p.row * width_ + p.col;
    if (idx >= static_cast<int>(site_at_.size())) return -1;
    return site_at_[idx];
  }

  void build_neighbor_lists() {
    neighbors_.resize(sites_.size());
    for (size_t i = 0; i < sites_.size(); ++i) {
      for (size_t j = 0; j < sites_.size(); ++j) {
        if (i == j) continue;
        if (distance(sites_[i], sites_[j]) <= params_.regrowth_radius) {
          neighbors_[i].push_back(static_cast<int>(j));
        }
      }
    }
  }

  HarvestParams params_;
  std::vector<Patch> patches_;
  std::vector<Pos> sites_;
  std::vector<int> site_patch_;
  std::vector<uint8_t> live_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<int> site_at_;
  std::vector<int> scratch_counts_;
  int width_ = 0;
};

}  // namespace svosim
