#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "svosim/common.hpp"
#include "svosim/rng.hpp"

namespace svosim {

enum class Terrain : uint8_t { Open = 0, Wall = 1, River = 2, Orchard = 3 };

// ASCII map legend (one character per cell):
//   '#'        wall
//   '.'  ' '   open ground
//   'P'        agent spawn point (open ground)
//   '~'        river cell (Cleanup)
//   'O'        orchard cell (Cleanup, apples can grow here)
//   '0'-'9'
//   'a'-'z'    apple site belonging to the patch with that id (HarvestPatch)
struct MapSpec {
  int height = 0;
  int width = 0;
  std::vector<Terrain> terrain;          // row-major, height*width
  std::vector<std::vector<Pos>> patch_sites;  // by patch id
  std::vector<Pos> spawn_points;
  std::vector<Pos> river_cells;
  std::vector<Pos> orchard_cells;
  std::string source_text;               // canonical text, hashed for replay headers

  int index(int row, int col) const { return row * width + col; }
  int index(const Pos& p) const { return p.row * width + p.col; }

  bool in_bounds(const Pos& p) const {
    return p.row >= 0 && p.row < height && p.col >= 0 && p.col < width;
  }

  Terrain at(const Pos& p) const { return terrain[index(p)]; }

  bool walkable(const Pos& p) const { return in_bounds(p) && at(p) != Terrain::Wall; }

  uint64_t hash() const { return fnv1a64(source_text); }
};

inline int patch_id_from_char(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'z') return 10 + (c - 'a');
  return -1;
}

inline MapSpec parse_map(const std::string& text) {
  MapSpec map;
  std::vector<std::string> rows;
  {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() && rows.empty()) continue;  // leading blank lines
      if (!line.empty()) rows.push_back(line);
    }
  }
  if (rows.empty()) throw ConfigError("map: no rows");
  map.height = static_cast<int>(rows.size());
  map.width = static_cast<int>(rows[0].size());
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != map.width) {
      throw ConfigError("map: ragged rows (all rows must have equal width)");
    }
  }
  map.terrain.assign(map.height * map.width, Terrain::Open);
  std::string canonical;
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      const char ch = rows[r][c];
      const Pos p{r, c};
      switch (ch) {
        case '#': map.terrain[map.index(p)] = Terrain::Wall; break;
        case '.':
        case ' ': break;
        case 'P': map.spawn_points.push_back(p); break;
        case '~':
          map.terrain[map.index(p)] = Terrain::River;
          map.river_cells.push_back(p);
          break;
        case 'O':
          map.terrain[map.index(p)] = Terrain::Orchard;
          map.orchard_cells.push_back(p);
          break;
        default: {
          const int pid = patch_id_from_char(ch);
          if (pid < 0) {
            throw ConfigError(std::string("map: unknown cell character '") + ch + "' at row " +
                              std::to_string(r) + " col " + std::to_string(c));
          }
          if (pid >= static_cast<int>(map.patch_sites.size())) {
            map.patch_sites.resize(pid + 1);
          }
          map.patch_sites[pid].push_back(p);
          break;
        }
      }
      canonical.push_back(ch == ' ' ? '.' : ch);
    }
    canonical.push_back('\n');
  }
  // Drop patch ids with no sites (sparse ids are a map authoring error).
  for (const auto& sites : map.patch_sites) {
    if (sites.empty()) throw ConfigError("map: patch ids must be contiguous from 0");
  }
  map.source_text = canonical;
  return map;
}

inline MapSpec load_map_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("map file not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_map(ss.str());
}

// ---------------------------------------------------------------------------
// Built-in maps. "builtin:<name>" resolves here, anything else is a path.
// ---------------------------------------------------------------------------

// 24x26 HarvestPatch map: 12 five-site patches (plus shapes), border walls.
inline const char* builtin_harvestpatch_map() {
  return
      "##########################\n"
      "#.P..........P..........P#\n"
      "#...0........1........2..#\n"
      "#..000......111......222.#\n"
      "#...0........1........2..#\n"
      "#........................#\n"
      "#.....P.............P....#\n"
      "#........................#\n"
      "#...3........4........5..#\n"
      "#..333......444......555.#\n"
      "#...3........4........5..#\n"
      "#........................#\n"
      "#.P..........P..........P#\n"
      "#........................#\n"
      "#...6........7........8..#\n"
      "#..666......777......888.#\n"
      "#...6........7........8..#\n"
      "#........................#\n"
      "#.....P.............P....#\n"
      "#........................#\n"
      "#...9........a........b..#\n"
      "#..999......aaa......bbb.#\n"
      "#...9........a........b..#\n"
      "##########################\n";
}

// 25x18 Cleanup map: river strip on the left, orchard block on the right.
inline const char* builtin_cleanup_map() {
  return
      "##################\n"
      "#~~~......OOOOOO.#\n"
      "#~~~..P...OOOOOO.#\n"
      "#~~~......OOOOOO.#\n"
      "#~~~......OOOOOO.#\n"
      "#~~~...P..OOOOOO.#\n"
      "#~~~......OOOOOO.#\n"
      "#~~~......OOOOOO.#\n"
      "#~~~..P...OOOOOO.#\n"
      "#~~~......OOOOOO.#\n"
      "#~~~......OOOOOO.#\n"
      "#~~~...P..OOOOOO.#\n"
      "#~~~......OOOOOO.#\n"
      "#~~~......OOOOOO.#\n"
      "#~~~..P...OOOOOO.#\n"
      "#~~~......OOOOOO.#\n"
      "#~~~......OOOOOO.#\n"
      "#~~~...P..OOOOOO.#\n"
      "#~~~......OOOOOO.#\n"
      "#~~~......OOOOOO.#\n"
      "#~~~..P...OOOOOO.#\n"
      "#~~~......OOOOOO.#\n"
      "#~~~......OOOOOO.#\n"
      "#~~~...P..OOOOOO.#\n"
      "##################\n";
}

// Small maps for smoke training and fast tests.
inline const char* builtin_harvestpatch_micro_map() {
  return
      "##############\n"
      "#P...........#\n"
      "#..0......1..#\n"
      "#.000.....111#\n"
      "#..0......1..#\n"
      "#......P.....#\n"
      "#............#\n"
      "#...2........#\n"
      "#..222...P...#\n"
      "#...2........#\n"
      "#...........P#\n"
      "##############\n";
}

inline const char* builtin_cleanup_micro_map() {
  return
      "##############\n"
      "#~~....OOOO..#\n"
      "#~~.P..OOOO..#\n"
      "#~~....OOOO..#\n"
      "#~~.P..OOOO..#\n"
      "#~~....OOOO..#\n"
      "#~~.P..OOOO..#\n"
      "#~~....OOOO..#\n"
      "#~~.P..OOOO..#\n"
      "#~~....OOOO..#\n"
      "##############\n";
}

inline MapSpec load_map(const std::string& ref) {
  if (ref.rfind("builtin:", 0) == 0) {
    const std::string name = ref.substr(8);
    if (name == "harvestpatch") return parse_map(builtin_harvestpatch_map());
    if (name == "cleanup") return parse_map(builtin_cleanup_map());
    if (name == "harvestpatch_micro") return parse_map(builtin_harvestpatch_micro_map());
    if (name == "cleanup_micro") return parse_map(builtin_cleanup_micro_map());
    throw ConfigError("unknown builtin map: " + name);
  }
  return load_map_file(ref);
}

}  // namespace svosim
