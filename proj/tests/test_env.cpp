#include <gtest/gtest.h>

#include <cmath>

#include <svosim/cleanup.hpp>
#include <svosim/grid.hpp>
#include <svosim/harvest.hpp>
#include <svosim/map.hpp>

using namespace svosim;

// One five-site plus-shaped patch: center (2,2) and its four axis
// neighbors, all within radius 3 of each other.
static const char* kPlusPatchMap =
    "######\n"
    "#P0..#\n"
    "#000.#\n"
    "#.0..#\n"
    "######\n";

static MapSpec plus_map() {
  // sites: (1,2) (2,1) (2,2) (2,3) (3,2)
  return parse_map(kPlusPatchMap);
}

TEST(Harvest, InitialSpawnNeverLeavesAPatchEmpty) {
  HarvestParams params;
  params.initial_spawn_prob = 0.05;  // empties are likely per draw, redraw must fix them
  const MapSpec map = load_map("builtin:harvestpatch");
  PatchMap patches(map, params);
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    patches.spawn_initial(rng);
    for (const Patch& p : patches.patches()) {
      EXPECT_GT(p.live_count, 0);
      EXPECT_FALSE(p.depleted);
    }
  }
}

TEST(Harvest, HarvestRemovesAppleAndReportsEndangered) {
  HarvestParams params;
  params.initial_spawn_prob = 1.0;
  PatchMap patches(plus_map(), params);
  Rng rng(1);
  patches.spawn_initial(rng);
  ASSERT_EQ(patches.total_live(), 5);

  bool endangered = true;
  int patch_id = -1;
  EXPECT_EQ(patches.harvest(Pos{2, 2}, &endangered, &patch_id), 1);
  EXPECT_FALSE(endangered);
  EXPECT_EQ(patch_id, 0);
  EXPECT_EQ(patches.total_live(), 4);
  EXPECT_EQ(patches.harvest(Pos{2, 2}, &endangered, &patch_id), 0);  // already gone
  EXPECT_EQ(patches.harvest(Pos{1, 1}, &endangered, &patch_id), 0);  // not a site

  // reduce to a single apple: it becomes endangered
  patches.harvest(Pos{1, 2});
  patches.harvest(Pos{2, 1});
  patches.harvest(Pos{2, 3});
  EXPECT_TRUE(patches.endangered_at(Pos{3, 2}));
  const auto sites = patches.endangered_sites();
  ASSERT_EQ(sites.size(), 1u);
  EXPECT_EQ(sites[0], (Pos{3, 2}));
  EXPECT_EQ(patches.live_count_at(Pos{3, 2}), 1);

  EXPECT_EQ(patches.harvest(Pos{3, 2}, &endangered, &patch_id), 1);
  EXPECT_TRUE(endangered);
  EXPECT_TRUE(patches.patches()[0].depleted);
}

TEST(Harvest, DepletedPatchNeverRegrows) {
  HarvestParams params;
  params.initial_spawn_prob = 1.0;
  PatchMap patches(plus_map(), params);
  Rng rng(2);
  patches.spawn_initial(rng);
  patches.harvest(Pos{1, 2});
  patches.harvest(Pos{2, 1});
  patches.harvest(Pos{2, 2});
  patches.harvest(Pos{2, 3});
  patches.harvest(Pos{3, 2});
  ASSERT_TRUE(patches.patches()[0].depleted);
  for (int t = 0; t < 2000; ++t) {
    patches.regrow(rng);
    ASSERT_EQ(patches.total_live(), 0);
  }
}

TEST(Harvest, ZeroLiveNeighborsMeansZeroRegrowthProbability) {
  HarvestParams params;
  EXPECT_EQ(params.regrowth_prob_for(0), 0.0);
  EXPECT_GT(params.regrowth_prob_for(1), 0.0);
}

TEST(Harvest, NeighborBandsClampToLastEntry) {
  HarvestParams params;  // bands: 0, .01, .01, .05, .05, .05, .10
  EXPECT_DOUBLE_EQ(params.regrowth_prob_for(1), 0.01);
  EXPECT_DOUBLE_EQ(params.regrowth_prob_for(3), 0.05);
  EXPECT_DOUBLE_EQ(params.regrowth_prob_for(6), 0.10);
  EXPECT_DOUBLE_EQ(params.regrowth_prob_for(25), 0.10);
}

TEST(Harvest, RegrowthFrequencyMatchesFourNeighborBand) {
  // center site empty with its 4 arm neighbors live -> regrow prob 0.05
  HarvestParams params;
  params.initial_spawn_prob = 1.0;
  const MapSpec map = plus_map();
  const int trials = 20000;
  int regrew = 0;
  Rng rng(99);
  for (int t = 0; t < trials; ++t) {
    PatchMap patches(map, params);
    patches.spawn_initial(rng);
    patches.harvest(Pos{2, 2});
    patches.regrow(rng);
    regrew += patches.total_live() == 5 ? 1 : 0;
  }
  const double p = 0.05;
  const double freq = static_cast<double>(regrew) / trials;
  const double sigma = std::sqrt(p * (1 - p) / trials);
  EXPECT_NEAR(freq, p, 3 * sigma);
}

TEST(Harvest, RegrowthUsesEntryStateNotInPassSpawns) {
  // Bands: k=1 regrows surely, k=2 never. One live site and two empty
  // ones: both empties see k=1 at entry and must both regrow. If spawns
  // fed each other within the pass, the second empty would see k=2 and
  // stay empty.
  HarvestParams params;
  params.initial_spawn_prob = 1.0;
  params.regrowth_probabilities = {0.0, 1.0, 0.0};
  const MapSpec map = parse_map("#####\n#000#\n#P..#\n#####\n");
  PatchMap patches(map, params);
  Rng rng(5);
  patches.spawn_initial(rng);
  patches.harvest(Pos{1, 1});
  patches.harvest(Pos{1, 3});
  ASSERT_EQ(patches.total_live(), 1);
  patches.regrow(rng);
  EXPECT_EQ(patches.total_live(), 3);
}

TEST(Harvest, RadiusInvariantRejectsBadMaps) {
  HarvestParams params;  // radius 3
  // two patches 2 apart: cross-patch distance within the radius
  EXPECT_THROW(PatchMap(parse_map("######\n#0.1.#\n######\n"), params), ConfigError);
  // one patch with sites 4 apart: same-patch distance beyond the radius
  EXPECT_THROW(PatchMap(parse_map("#######\n#0...0#\n#######\n"), params), ConfigError);
}

TEST(Cleanup, InitialPollutionFractionHonored) {
  CleanupParams params;
  params.initial_polluted_fraction = 1.0;
  const MapSpec map = load_map("builtin:cleanup");
  RiverState river(map, params);
  Rng rng(1);
  river.spawn_initial(rng);
  EXPECT_EQ(river.polluted_count(), river.cell_count());
  EXPECT_DOUBLE_EQ(river.pollution_fraction(), 1.0);

  params.initial_polluted_fraction = 0.5;
  RiverState half(map, params);
  half.spawn_initial(rng);
  EXPECT_EQ(half.polluted_count(),
            static_cast<int>(std::lround(0.5 * half.cell_count())));
}

TEST(Cleanup, SaturatedRiverStopsPolluting) {
  CleanupParams params;
  params.initial_polluted_fraction = 1.0;
  params.pollution_spawn_prob = 1.0;
  RiverState river(load_map("builtin:cleanup_micro"), params);
  Rng rng(2);
  river.spawn_initial(rng);
  const int before = river.polluted_count();
  for (int t = 0; t < 100; ++t) river.pollute(rng);
  EXPECT_EQ(river.polluted_count(), before);
}

TEST(Cleanup, PolluteAddsOneCellAtConfiguredRate) {
  CleanupParams params;
  params.initial_polluted_fraction = 0.0;
  params.pollution_spawn_prob = 0.5;
  const MapSpec map = load_map("builtin:cleanup");
  const int trials = 20000;
  int polluted = 0;
  Rng rng(7);
  for (int t = 0; t < trials; ++t) {
    RiverState river(map, params);
    river.spawn_initial(rng);
    river.pollute(rng);
    polluted += river.polluted_count();
  }
  const double freq = static_cast<double>(polluted) / trials;
  const double sigma = std::sqrt(0.25 / trials);
  EXPECT_NEAR(freq, 0.5, 3 * sigma);
}

TEST(Cleanup, CleanRemovesOnlyPollutedCells) {
  CleanupParams params;
  params.initial_polluted_fraction = 1.0;
  const MapSpec map = parse_map("#####\n#~~~#\n#P..#\n#####\n");
  RiverState river(map, params);
  Rng rng(3);
  river.spawn_initial(rng);
  EXPECT_EQ(river.clean({Pos{1, 1}, Pos{1, 2}, Pos{2, 1}}), 2);  // (2,1) is not river
  EXPECT_EQ(river.polluted_count(), 1);
  EXPECT_FALSE(river.polluted_at(Pos{1, 1}));
  EXPECT_TRUE(river.polluted_at(Pos{1, 3}));
  EXPECT_EQ(river.clean({Pos{1, 1}}), 0);  // already clean
}

TEST(Cleanup, GrowthRateLinearInPollution) {
  CleanupParams params;  // max 0.05, threshold 0.4, linear
  const MapSpec map = parse_map("######\n#~~~~#\n#~P..#\n#OO..#\n######\n");
  ASSERT_EQ(map.river_cells.size(), 5u);
  params.initial_polluted_fraction = 0.0;
  RiverState river(map, params);
  Rng rng(4);
  river.spawn_initial(rng);
  EXPECT_DOUBLE_EQ(orchard_growth_rate(river), 0.05);

  // pollute exactly one of five cells -> fraction 0.2 -> rate halves
  params.initial_polluted_fraction = 0.2;
  RiverState one(map, params);
  one.spawn_initial(rng);
  EXPECT_DOUBLE_EQ(orchard_growth_rate(one), 0.025);

  params.initial_polluted_fraction = 0.4;
  RiverState atthresh(map, params);
  atthresh.spawn_initial(rng);
  EXPECT_DOUBLE_EQ(orchard_growth_rate(atthresh), 0.0);

  params.initial_polluted_fraction = 1.0;
  RiverState full(map, params);
  full.spawn_initial(rng);
  EXPECT_DOUBLE_EQ(orchard_growth_rate(full), 0.0);
}

TEST(Cleanup, StepwiseGrowthIsFlatBelowThreshold) {
  CleanupParams params;
  params.stepwise_growth = true;
  const MapSpec map = parse_map("######\n#~~~~#\n#~P..#\n#OO..#\n######\n");
  Rng rng(4);
  params.initial_polluted_fraction = 0.2;
  RiverState below(map, params);
  below.spawn_initial(rng);
  EXPECT_DOUBLE_EQ(orchard_growth_rate(below), 0.05);
  params.initial_polluted_fraction = 0.4;
  RiverState at(map, params);
  at.spawn_initial(rng);
  EXPECT_DOUBLE_EQ(orchard_growth_rate(at), 0.0);
}

TEST(Cleanup, SaturatedRiverBlocksOrchardGrowth) {
  CleanupParams params;
  params.initial_polluted_fraction = 1.0;
  params.initial_apple_prob = 0.0;
  const MapSpec map = load_map("builtin:cleanup_micro");
  RiverState river(map, params);
  OrchardState orchard(map, params);
  Rng rng(6);
  river.spawn_initial(rng);
  orchard.spawn_initial(rng);
  for (int t = 0; t < 500; ++t) {
    orchard.grow(orchard_growth_rate(river), rng);
    ASSERT_EQ(orchard.apple_count(), 0);
  }
}

TEST(Cleanup, OrchardHarvestAndGrowth) {
  CleanupParams params;
  params.initial_apple_prob = 1.0;
  const MapSpec map = parse_map("#####\n#~OO#\n#P..#\n#####\n");
  OrchardState orchard(map, params);
  Rng rng(8);
  orchard.spawn_initial(rng);
  EXPECT_EQ(orchard.apple_count(), 2);
  EXPECT_TRUE(orchard.apple_at(Pos{1, 2}));
  EXPECT_EQ(orchard.harvest(Pos{1, 2}), 1);
  EXPECT_EQ(orchard.harvest(Pos{1, 2}), 0);
  EXPECT_EQ(orchard.apple_count(), 1);
  orchard.grow(1.0, rng);  // certain regrowth refills the empty cell
  EXPECT_EQ(orchard.apple_count(), 2);
}

// --- world ---------------------------------------------------------------

static WorldConfig harvest_config(int n) {
  WorldConfig wc;
  wc.kind = EnvKind::HarvestPatch;
  wc.n_agents = n;
  return wc;
}

// Apple sites on all four sides of the single spawn point: the first
// move always lands on an apple.
static const char* kSurroundedSpawn =
    "#####\n"
    "#.0.#\n"
    "#0P0#\n"
    "#.0.#\n"
    "#####\n";

TEST(World, MoveOntoAppleCollectsIt) {
  WorldConfig wc = harvest_config(1);
  wc.harvest.initial_spawn_prob = 1.0;
  World world(parse_map(kSurroundedSpawn), wc, 12);
  ASSERT_EQ(world.patch_map().total_live(), 4);
  const StepResult sr = world.step({Action::MoveForward});
  EXPECT_EQ(sr.rewards[0], 1);
  EXPECT_EQ(sr.apples_collected, 1);
  EXPECT_TRUE(sr.endangered_consumed.empty());
  EXPECT_LE(world.patch_map().total_live(), 4);  // regrowth may refill
}

TEST(World, SpawnCapacityEnforced) {
  EXPECT_THROW(World(parse_map(kSurroundedSpawn), harvest_config(2), 1), ConfigError);
}

TEST(World, HarvestMapNeedsPatches) {
  EXPECT_THROW(World(parse_map("###\n#P#\n###\n"), harvest_config(1), 1), ConfigError);
}

TEST(World, WallsAndOccupancyBlockMovement) {
  // single corridor: the agent cannot leave row 1
  WorldConfig wc = harvest_config(1);
  wc.harvest.initial_spawn_prob = 1.0;
  World world(parse_map("#####\n#P.0#\n#####\n"), wc, 3);
  const Pos start = world.avatar(0).position;
  ASSERT_EQ(start, (Pos{1, 1}));
  // rotate to north and try to walk into the wall
  while (world.avatar(0).orientation != Orientation::North) {
    world.step({Action::RotateRight});
  }
  world.step({Action::MoveForward});
  EXPECT_EQ(world.avatar(0).position, (Pos{1, 1}));
  world.step({Action::StrafeRight});  // east, open
  EXPECT_EQ(world.avatar(0).position, (Pos{1, 2}));
}

TEST(World, MoveConflictLeavesOneWinner) {
  // two agents flanking one open cell; both try to enter it
  WorldConfig wc = harvest_config(2);
  wc.harvest.initial_spawn_prob = 1.0;
  // spawns at (1,1) and (1,3); contested cell (1,2); patch on row 3 out of the way
  const MapSpec map = parse_map("#####\n#P.P#\n#...#\n#0..#\n#####\n");
  World world(map, wc, 21);
  // spawn assignment is randomized, so pick sides by position
  const int left = world.avatar(0).position.col < world.avatar(1).position.col ? 0 : 1;
  const int right = 1 - left;
  for (int tries = 0; tries < 4; ++tries) {
    std::vector<Action> act(2, Action::NoOp);
    if (world.avatar(left).orientation != Orientation::East) act[left] = Action::RotateRight;
    if (world.avatar(right).orientation != Orientation::West) act[right] = Action::RotateRight;
    if (act[0] == Action::NoOp && act[1] == Action::NoOp) break;
    world.step(act);
  }
  ASSERT_EQ(world.avatar(left).orientation, Orientation::East);
  ASSERT_EQ(world.avatar(right).orientation, Orientation::West);
  world.step({Action::MoveForward, Action::MoveForward});
  const bool left_won = world.avatar(left).position == Pos{1, 2};
  const bool right_won = world.avatar(right).position == Pos{1, 2};
  EXPECT_NE(left_won, right_won);  // exactly one of them got the cell
  EXPECT_NE(world.avatar(left).position, world.avatar(right).position);
}

TEST(World, PunishBeamStopsAtFirstAvatarAndPaysBoth) {
  WorldConfig wc = harvest_config(3);
  wc.harvest.initial_spawn_prob = 1.0;
  // three spawns in a row, patch kept far below
  const MapSpec map = parse_map("########\n#P.P.P.#\n#......#\n#...0..#\n########\n");
  World world(map, wc, 17);
  // identify the leftmost agent; orient it east
  int left = 0;
  for (int i = 1; i < 3; ++i) {
    if (world.avatar(i).position.col < world.avatar(left).position.col) left = i;
  }
  for (int tries = 0; tries < 4 && world.avatar(left).orientation != Orientation::East;
       ++tries) {
    std::vector<Action> act(3, Action::NoOp);
    act[left] = Action::RotateRight;
    world.step(act);
  }
  std::vector<Action> act(3, Action::NoOp);
  act[left] = Action::FirePunish;
  const StepResult sr = world.step(act);
  ASSERT_EQ(sr.beams.size(), 1u);
  const BeamResult& beam = sr.beams[0];
  EXPECT_EQ(beam.origin, left);
  EXPECT_EQ(beam.kind, BeamKind::Punish);
  ASSERT_EQ(beam.hit_agents.size(), 1u);  // stopped at the middle avatar
  const int victim = beam.hit_agents[0];
  EXPECT_EQ(world.avatar(victim).position.col, 3);
  EXPECT_EQ(sr.rewards[left], -1);
  EXPECT_EQ(sr.rewards[victim], -50);
  // the beam never reached the third avatar
  for (const Pos& p : beam.hit_cells) {
    EXPECT_LE(p.col, 3);
  }
}

TEST(World, PunishBeamStopsAtWalls) {
  WorldConfig wc = harvest_config(1);
  wc.harvest.initial_spawn_prob = 1.0;
  const MapSpec map = parse_map("#####\n#P.0#\n#####\n");
  World world(map, wc, 5);
  while (world.avatar(0).orientation != Orientation::West) {
    world.step({Action::RotateRight});
  }
  const StepResult sr = world.step({Action::FirePunish});
  ASSERT_EQ(sr.beams.size(), 1u);
  EXPECT_TRUE(sr.beams[0].hit_cells.empty());  // wall directly ahead
  EXPECT_EQ(sr.rewards[0], -1);                // cost applies even on a miss
}

TEST(World, CleanBeamPassesThroughAvatarsAndCleans) {
  WorldConfig wc;
  wc.kind = EnvKind::Cleanup;
  wc.n_agents = 2;
  wc.cleanup.initial_polluted_fraction = 1.0;
  wc.cleanup.initial_apple_prob = 0.0;
  wc.cleanup.pollution_spawn_prob = 0.0;  // no re-pollution after the beams
  // river to the west; agent 1 may stand between agent 0 and the river
  const MapSpec map = parse_map("######\n#~P.O#\n#~..O#\n#~P.O#\n######\n");
  World world(map, wc, 23);
  // move both agents onto column 2/3 split: orient agent 0 west with
  // agent 1 in front of it on the same row
  // Simpler: orient both west and fire from both rows; at least one
  // beam crosses the other agent's row only if rows match -- instead
  // assert cleaning works through whatever the layout is.
  for (int tries = 0; tries < 4; ++tries) {
    std::vector<Action> act(2, Action::NoOp);
    bool done = true;
    for (int i = 0; i < 2; ++i) {
      if (world.avatar(i).orientation != Orientation::West) {
        act[i] = Action::RotateRight;
        done = false;
      }
    }
    if (done) break;
    world.step(act);
  }
  const int before = world.river().polluted_count();
  ASSERT_EQ(before, 3);
  const StepResult sr = world.step({Action::FireClean, Action::FireClean});
  EXPECT_EQ(sr.cleaned_cells[0] + sr.cleaned_cells[1], 2);
  EXPECT_EQ(world.river().polluted_count(), 1);
  EXPECT_EQ(sr.rewards[0], 0);  // cleaning is free and unrewarded
  EXPECT_EQ(sr.rewards[1], 0);
}

TEST(World, CleanBeamThroughAvatarReachesRiver) {
  WorldConfig wc;
  wc.kind = EnvKind::Cleanup;
  wc.n_agents = 2;
  wc.cleanup.initial_polluted_fraction = 1.0;
  wc.cleanup.initial_apple_prob = 0.0;
  wc.cleanup.pollution_spawn_prob = 0.0;
  wc.beams.clean_length = 5;
  // one row: river, two agents side by side, orchard
  const MapSpec map = parse_map("#######\n#~PP.O#\n#######\n");
  World world(map, wc, 31);
  // the agent in column 3 fires west across the agent in column 2
  int shooter = world.avatar(0).position.col == 3 ? 0 : 1;
  for (int tries = 0; tries < 4 && world.avatar(shooter).orientation != Orientation::West;
       ++tries) {
    std::vector<Action> act(2, Action::NoOp);
    act[shooter] = Action::RotateRight;
    world.step(act);
  }
  std::vector<Action> act(2, Action::NoOp);
  act[shooter] = Action::FireClean;
  const StepResult sr = world.step(act);
  EXPECT_EQ(sr.cleaned_cells[shooter], 1);
  EXPECT_EQ(world.river().polluted_count(), 0);
}

TEST(World, PunishTimeoutFreezesVictim) {
  WorldConfig wc = harvest_config(2);
  wc.harvest.initial_spawn_prob = 1.0;
  wc.beams.punish_timeout = 3;
  const MapSpec map = parse_map("######\n#P.P.#\n#.0..#\n######\n");
  World world(map, wc, 9);
  int left = world.avatar(0).position.col < world.avatar(1).position.col ? 0 : 1;
  const int right = 1 - left;
  for (int tries = 0; tries < 4 && world.avatar(left).orientation != Orientation::East;
       ++tries) {
    std::vector<Action> act(2, Action::NoOp);
    act[left] = Action::RotateRight;
    world.step(act);
  }
  std::vector<Action> act(2, Action::NoOp);
  act[left] = Action::FirePunish;
  const StepResult sr = world.step(act);
  ASSERT_EQ(sr.beams[0].hit_agents.size(), 1u);
  EXPECT_EQ(world.avatar(right).frozen_steps, 3);
  // frozen avatars cannot move or fire
  const Pos held = world.avatar(right).position;
  act[left] = Action::NoOp;
  act[right] = Action::MoveForward;
  world.step(act);
  EXPECT_EQ(world.avatar(right).position, held);
  world.step(act);
  world.step(act);
  EXPECT_EQ(world.avatar(right).frozen_steps, 0);
  world.step(act);  // thawed now; move may succeed depending on facing
}

TEST(World, ObservationPaddingAndPalette) {
  WorldConfig wc = harvest_config(1);
  wc.harvest.initial_spawn_prob = 1.0;
  // borderless map, spawn at (0,0): most of the window is padding
  const MapSpec map = parse_map("P...\n....\n..0.\n");
  World world(map, wc, 2);
  ASSERT_EQ(world.avatar(0).position, (Pos{0, 0}));
  const Observation obs = world.observe(0);
  int padding = 0;
  for (int wr = 0; wr < kWindow; ++wr) {
    for (int wc2 = 0; wc2 < kWindow; ++wc2) {
      if (obs.pixel_is(wr, wc2, kColorPadding)) padding += 1;
    }
  }
  // visible cells: rows 0..2 x cols 0..3 = 12 of 225
  EXPECT_EQ(padding, 225 - 12);
  EXPECT_TRUE(obs.pixel_is(kWindowHalf, kWindowHalf, kColorSelf));
  EXPECT_TRUE(obs.pixel_is(kWindowHalf + 2, kWindowHalf + 2, kColorApple));
  EXPECT_TRUE(obs.pixel_is(kWindowHalf, kWindowHalf + 1, kColorOpen));
}

TEST(World, ObservationShowsTerrainColors) {
  WorldConfig wc;
  wc.kind = EnvKind::Cleanup;
  wc.n_agents = 1;
  wc.cleanup.initial_polluted_fraction = 1.0;
  wc.cleanup.initial_apple_prob = 0.0;
  wc.cleanup.pollution_spawn_prob = 0.0;
  const MapSpec map = parse_map("#####\n#~PO#\n#####\n");
  World world(map, wc, 2);
  const Observation obs = world.observe(0);
  EXPECT_TRUE(obs.pixel_is(kWindowHalf, kWindowHalf - 1, kColorRiverPolluted));
  EXPECT_TRUE(obs.pixel_is(kWindowHalf, kWindowHalf + 1, kColorOrchardEmpty));
  EXPECT_TRUE(obs.pixel_is(kWindowHalf - 1, kWindowHalf, kColorWall));
  // clean the river cell and re-render
  while (world.avatar(0).orientation != Orientation::West) {
    world.step({Action::RotateRight});
  }
  world.step({Action::FireClean});
  EXPECT_TRUE(world.observe(0).pixel_is(kWindowHalf, kWindowHalf - 1, kColorRiverClean));
}

TEST(World, GroupmatesRenderInDistinctColors) {
  WorldConfig wc = harvest_config(2);
  wc.harvest.initial_spawn_prob = 1.0;
  const MapSpec map = parse_map("#####\n#PP0#\n#####\n");
  World world(map, wc, 40);
  const Observation obs = world.observe(0);
  const Pos other = world.avatar(1).position;
  const Pos self = world.avatar(0).position;
  const int wr = kWindowHalf + other.row - self.row;
  const int wcol = kWindowHalf + other.col - self.col;
  EXPECT_TRUE(obs.pixel_is(wr, wcol, kAvatarColors[1]));
}

TEST(World, ApplesInWindowCounts) {
  WorldConfig wc = harvest_config(1);
  wc.harvest.initial_spawn_prob = 1.0;
  World world(parse_map(kSurroundedSpawn), wc, 3);
  EXPECT_EQ(world.apples_in_window(0), 4);
}

TEST(World, StateHashReproducibleAndSensitive) {
  const MapSpec map = load_map("builtin:harvestpatch");
  WorldConfig wc = harvest_config(5);
  World a(map, wc, 77);
  World b(map, wc, 77);
  EXPECT_EQ(a.state_hash(), b.state_hash());
  const std::vector<Action> acts(5, Action::MoveForward);
  a.step(acts);
  b.step(acts);
  EXPECT_EQ(a.state_hash(), b.state_hash());
  a.step(acts);
  EXPECT_NE(a.state_hash(), b.state_hash());
  World c(map, wc, 78);
  EXPECT_NE(b.state_hash(), c.state_hash());
}

TEST(World, RejectsOutOfRangeActions) {
  WorldConfig wc = harvest_config(1);
  World world(parse_map(kSurroundedSpawn), wc, 3);
  EXPECT_THROW(world.step({Action::FireClean}), ConfigError);  // cleanup-only action
  EXPECT_THROW(world.step({}), ConfigError);                   // wrong arity
}
