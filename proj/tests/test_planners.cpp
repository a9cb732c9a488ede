#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "alcon/planners.hpp"
#include "alcon/random.hpp"

using namespace alcon;

namespace {

GridGeometry geom(int w, int h, double res = 0.1) { return {w, h, res, {}}; }

OccupancyGrid random_grid(Rng& rng, int w, int h, double p_obstacle, double p_unknown) {
  OccupancyGrid grid(geom(w, h), CellState::Free);
  for (std::size_t i = 0; i < grid.geometry().size(); ++i) {
    const double u = uniform01(rng);
    if (u < p_obstacle) grid[i] = CellState::Obstacle;
    else if (u < p_obstacle + p_unknown) grid[i] = CellState::Unknown;
  }
  return grid;
}

Cell random_cell(Rng& rng, const GridGeometry& g) {
  return {static_cast<int>(uniform_index(rng, static_cast<std::size_t>(g.height))),
          static_cast<int>(uniform_index(rng, static_cast<std::size_t>(g.width)))};
}

// Edge relaxation over all cells until nothing improves; distances in cost units.
std::vector<double> bellman_ford(const OccupancyGrid& grid, Cell source, bool unknown_traversable) {
  const GridGeometry& g = grid.geometry();
  std::vector<double> d(g.size(), std::numeric_limits<double>::infinity());
  d[g.index(source)] = 0.0;
  for (bool changed = true; changed;) {
    changed = false;
    for (int r = 0; r < g.height; ++r)
      for (int c = 0; c < g.width; ++c) {
        const double du = d[g.index({r, c})];
        if (!std::isfinite(du)) continue;
        for (const auto& o : kNeighbours8) {
          const Cell n{r + o[0], c + o[1]};
          if (!g.contains(n) || !move_allowed(grid, {r, c}, n, unknown_traversable)) continue;
          const double w = (o[0] != 0 && o[1] != 0) ? std::numbers::sqrt2 : 1.0;
          double& dn = d[g.index(n)];
          if (du + w < dn - 1e-12) {
            dn = du + w;
            changed = true;
          }
        }
      }
  }
  return d;
}

bool path_is_legal(const OccupancyGrid& grid, Cell from, const Path& p, bool unknown_traversable) {
  Cell prev = from;
  for (const Cell& c : p.cells) {
    if (!move_allowed(grid, prev, c, unknown_traversable)) return false;
    prev = c;
  }
  return true;
}

}  // namespace

TEST_CASE("dijkstra matches Bellman-Ford on random grids") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int w = 2 + static_cast<int>(uniform_index(rng, 19)), h = 2 + static_cast<int>(uniform_index(rng, 19));
    const bool unknown_ok = trial % 2 == 0;
    const OccupancyGrid grid = random_grid(rng, w, h, 0.25, 0.15);
    const Cell a = random_cell(rng, grid.geometry());
    const auto bf = bellman_ford(grid, a, unknown_ok);
    for (int q = 0; q < 10; ++q) {
      const Cell b = random_cell(rng, grid.geometry());
      const auto p = dijkstra(grid, a, b, unknown_ok);
      const double ref = bf[grid.geometry().index(b)];
      if (grid.at(a) == CellState::Obstacle || !traversable(grid.at(b), unknown_ok) || !std::isfinite(ref)) {
        if (a != b) CHECK_FALSE(p.has_value());
        continue;
      }
      REQUIRE(p.has_value());
      CHECK(p->steps.units() == doctest::Approx(ref).epsilon(1e-12));
      CHECK(p->cost_m == doctest::Approx(ref * 0.1).epsilon(1e-12));
      CHECK(path_is_legal(grid, a, *p, unknown_ok));
      if (a != b) CHECK(p->cells.back() == b);
    }
  }
}

TEST_CASE("incremental planner tracks dijkstra under obstacle insertions") {
  Rng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const int w = 5 + static_cast<int>(uniform_index(rng, 30)), h = 5 + static_cast<int>(uniform_index(rng, 30));
    OccupancyGrid grid = random_grid(rng, w, h, 0.1, trial % 2 == 0 ? 0.4 : 0.15);
    const GridGeometry& g = grid.geometry();
    Cell goal = random_cell(rng, g), start = random_cell(rng, g);
    grid.at(goal) = CellState::Free;
    grid.at(start) = CellState::Free;
    // Odd trials block unknown cells, so reveals also open new edges.
    const bool unknown_ok = trial % 2 == 0;
    IncrementalPlanner planner(grid, goal, unknown_ok);
    for (int round = 0; round < 15; ++round) {
      const auto inc = planner.plan(start);
      const auto ref = dijkstra(grid, start, goal, unknown_ok);
      REQUIRE(inc.has_value() == ref.has_value());
      if (!ref) break;
      CHECK(inc->steps.units() == doctest::Approx(ref->steps.units()).epsilon(1e-12));
      CHECK(path_is_legal(grid, start, *inc, unknown_ok));
      if (inc->cells.empty()) break;
      // Reveal a few cells, some along the current path, then advance.
      for (int k = 0; k < 4; ++k) {
        const Cell c = k < 2 ? inc->cells[uniform_index(rng, inc->cells.size())] : random_cell(rng, g);
        if (!unknown_ok && k == 3) {
          // Open a random unknown cell.
          if (grid.at(c) == CellState::Unknown) {
            grid.at(c) = CellState::Free;
            planner.cell_changed(c);
          }
          continue;
        }
        if (c == goal || c == start || grid.at(c) != CellState::Unknown) continue;
        grid.at(c) = uniform01(rng) < 0.6 ? CellState::Obstacle : CellState::Free;
        planner.cell_changed(c);
      }
      if (move_allowed(grid, start, inc->cells.front(), unknown_ok)) start = inc->cells.front();
    }
  }
}

TEST_CASE("incremental planner on open rooms, where heuristic ties are everywhere") {
  Rng rng(23);
  for (int trial = 0; trial < 12; ++trial) {
    OccupancyGrid grid = random_grid(rng, 60, 45, 0.01, 0.7);
    const GridGeometry& g = grid.geometry();
    const Cell goal{40, 55};
    Cell start{3, 2};
    grid.at(goal) = grid.at(start) = CellState::Free;
    // A wall with two gaps; the near gap closes once the robot is under way.
    for (int r = 0; r < 45; ++r)
      if (r < 18 || (r > 21 && r < 37) || r > 40) grid.at({r, 30}) = CellState::Obstacle;
    IncrementalPlanner planner(grid, goal, true);
    for (int step = 0; step < 200; ++step) {
      const auto inc = planner.plan(start);
      const auto ref = dijkstra(grid, start, goal, true);
      REQUIRE(inc.has_value() == ref.has_value());
      if (!ref || inc->cells.empty()) break;
      REQUIRE(inc->steps.units() == doctest::Approx(ref->steps.units()).epsilon(1e-12));
      if (step == 10)
        for (int r = 18; r <= 21; ++r) {
          grid.at({r, 30}) = CellState::Obstacle;
          planner.cell_changed({r, 30});
        }
      // Sense a little around the robot.
      for (int k = 0; k < 6; ++k) {
        const Cell c{start.row + static_cast<int>(uniform_index(rng, 9)) - 4,
                     start.col + static_cast<int>(uniform_index(rng, 9)) - 4};
        if (!g.contains(c) || c == goal || grid.at(c) != CellState::Unknown) continue;
        grid.at(c) = uniform01(rng) < 0.1 ? CellState::Obstacle : CellState::Free;
        planner.cell_changed(c);
      }
      const Cell next = inc->cells.front();
      if (move_allowed(grid, start, next, true)) start = next;
    }
  }
}

TEST_CASE("incremental planner: unreachable goal and trivial start") {
  OccupancyGrid grid(geom(5, 5), CellState::Free);
  for (int r = 0; r < 5; ++r) grid.at({r, 2}) = CellState::Obstacle;
  IncrementalPlanner planner(grid, {2, 4}, true);
  CHECK_FALSE(planner.plan({2, 0}).has_value());
  const auto here = planner.plan({2, 4});
  REQUIRE(here.has_value());
  CHECK(here->cells.empty());
  grid.at({0, 2}) = CellState::Free;
  planner.cell_changed({0, 2});
  const auto p = planner.plan({2, 0});
  REQUIRE(p.has_value());
  CHECK(p->steps.units() == doctest::Approx(2 + 2 * std::numbers::sqrt2 + 2).epsilon(1e-12));
}

TEST_CASE("dijkstra hand cases") {
  OccupancyGrid open(geom(3, 3), CellState::Free);
  const auto same = dijkstra(open, {1, 1}, {1, 1}, false);
  REQUIRE(same.has_value());
  CHECK(same->cells.empty());
  CHECK(same->cost_m == 0.0);
  const auto corner = dijkstra(open, {0, 0}, {2, 2}, false);
  REQUIRE(corner.has_value());
  CHECK(corner->steps == PathSteps{0, 2});
  CHECK(corner->cost_m == 2 * std::numbers::sqrt2 * 0.1);

  OccupancyGrid walled(geom(5, 5), CellState::Free);
  for (int r = 0; r < 5; ++r) walled.at({r, 3}) = CellState::Obstacle;
  CHECK_FALSE(dijkstra(walled, {0, 0}, {0, 4}, false).has_value());
  CHECK_FALSE(dijkstra(walled, {0, 0}, {0, 3}, false).has_value());

  // No corner cutting: a diagonal squeeze between two obstacles is closed.
  OccupancyGrid squeeze(geom(2, 2), CellState::Free);
  squeeze.at({0, 1}) = squeeze.at({1, 0}) = CellState::Obstacle;
  CHECK_FALSE(dijkstra(squeeze, {0, 0}, {1, 1}, false).has_value());

  OccupancyGrid fog(geom(4, 1), CellState::Unknown);
  fog.at({0, 0}) = CellState::Free;
  CHECK_FALSE(dijkstra(fog, {0, 0}, {0, 3}, false).has_value());
  CHECK(dijkstra(fog, {0, 0}, {0, 3}, true)->cost_m == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("frontiers equal the brute-force predicate") {
  CHECK(detect_frontiers(OccupancyGrid(geom(6, 6), CellState::Free)).empty());
  CHECK(detect_frontiers(OccupancyGrid(geom(6, 6), CellState::Unknown)).empty());
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const OccupancyGrid grid = random_grid(rng, 25, 18, 0.2, 0.4);
    const GridGeometry& g = grid.geometry();
    std::vector<Cell> expected;
    for (int r = 0; r < g.height; ++r)
      for (int c = 0; c < g.width; ++c) {
        if (grid.at({r, c}) != CellState::Free) continue;
        bool touches = false;
        for (const Cell n : {Cell{r - 1, c}, Cell{r + 1, c}, Cell{r, c - 1}, Cell{r, c + 1}})
          touches |= g.contains(n) && grid.at(n) == CellState::Unknown;
        if (touches) expected.push_back({r, c});
      }
    CHECK(detect_frontiers(grid).cells == expected);
  }
}

TEST_CASE("random frontier: singleton, determinism, uniformity, empty set") {
  const GridGeometry g = geom(20, 20);
  FrontierSet one;
  one.cells = {{4, 7}};
  Rng rng(1);
  CHECK(rf_plan(one, g, rng).point == g.cell_center({4, 7}));
  CHECK(rf_plan(one, g, rng).source == PlannerSource::RF);

  FrontierSet ten;
  for (int i = 0; i < 10; ++i) ten.cells.push_back({i, 2 * i});
  Rng a(5), b(5);
  for (int i = 0; i < 20; ++i) CHECK(rf_plan(ten, g, a).point == rf_plan(ten, g, b).point);

  std::map<Cell, int> counts;
  Rng draw(99);
  for (int i = 0; i < 10000; ++i) ++counts[g.world_to_cell(rf_plan(ten, g, draw).point)];
  double chi2 = 0.0;
  for (const Cell& c : ten.cells) chi2 += (counts[c] - 1000.0) * (counts[c] - 1000.0) / 1000.0;
  // Central 99% of chi-square with 9 degrees of freedom.
  CHECK(chi2 > 1.735);
  CHECK(chi2 < 23.589);

  CHECK_THROWS_WITH_AS(rf_plan(FrontierSet{}, g, rng), doctest::Contains("no frontier"), Error);
}

TEST_CASE("nearest frontier: hand cases, ties and the linear-scan oracle") {
  const GridGeometry g = geom(30, 30);
  FrontierSet f;
  f.cells = {{5, 5}, {5, 15}, {20, 10}};
  CHECK(nearest_frontier(g.cell_center({5, 15}), f, g) == Cell{5, 15});
  CHECK(nearest_frontier(g.cell_center({5, 10}), f, g) == Cell{5, 5});  // equidistant: lowest (row, col)
  CHECK_THROWS_AS(nearest_frontier({1, 1}, FrontierSet{}, g), Error);
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    FrontierSet r;
    for (int i = 0; i < 12; ++i) r.cells.push_back(random_cell(rng, g));
    std::sort(r.cells.begin(), r.cells.end());
    const Point p{uniform01(rng) * 3.0, uniform01(rng) * 3.0};
    Cell best = r.cells.front();
    for (const Cell& c : r.cells)
      if (squared_distance(g.cell_center(c), p) < squared_distance(g.cell_center(best), p)) best = c;
    CHECK(nearest_frontier(p, r, g) == best);
  }
}

TEST_CASE("TFP: single disk, ranked disks, ties, empty map") {
  const GridGeometry g = geom(200, 200);
  ScoreMap one(g, 0);
  stamp_disk(one, g.cell_center({50, 60}), 2.0, 150);
  auto r = tfp_plan(one, TfpConfig{});
  CHECK(r.proposal.valid);
  CHECK(r.proposal.point == g.cell_center({50, 60}));
  CHECK(r.proposal.source == PlannerSource::TFP);

  ScoreMap three(g, 0);
  stamp_disk(three, g.cell_center({30, 30}), 2.0, 50);
  stamp_disk(three, g.cell_center({100, 150}), 2.0, 255);
  stamp_disk(three, g.cell_center({160, 40}), 2.0, 150);
  r = tfp_plan(three, TfpConfig{});
  CHECK(r.proposal.point == g.cell_center({100, 150}));
  REQUIRE(r.peaks.size() == 3);
  CHECK(r.peaks[1].cell == Cell{160, 40});
  CHECK(r.peaks[2].cell == Cell{30, 30});
  // Clean map re-rendered with rank scores.
  CHECK(r.clean.at({100, 150}) == 255);
  CHECK(r.clean.at({160, 40}) == 150);
  CHECK(r.clean.at({30, 30}) == 50);

  ScoreMap tie(g, 0);
  stamp_disk(tie, g.cell_center({120, 20}), 2.0, 255);
  stamp_disk(tie, g.cell_center({40, 170}), 2.0, 255);
  CHECK(tfp_plan(tie, TfpConfig{}).proposal.point == g.cell_center({40, 170}));

  CHECK_FALSE(tfp_plan(ScoreMap(g, 0), TfpConfig{}).proposal.valid);

  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    ScoreMap m(g, 0);
    for (int k = 0; k < 5; ++k)
      stamp_disk(m, g.cell_center(random_cell(rng, g)), 0.5 + uniform01(rng) * 2.0,
                 static_cast<std::uint8_t>(1 + uniform_index(rng, 255)));
    const auto res = tfp_plan(m, TfpConfig{});
    const auto top = *std::max_element(m.data().begin(), m.data().end());
    CHECK(m.at(g.world_to_cell(res.proposal.point)) == top);
  }
}
