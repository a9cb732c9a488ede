#include "alcon/worldgen.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "alcon/planners.hpp"

namespace alcon {

void WorldParams::validate() const {
  if (canvas_width <= 0 || canvas_height <= 0) throw ConfigError("grid.width", "grid must be non-empty");
  if (!(resolution > 0.0)) throw ConfigError("grid.resolution_m", "must be positive");
  if (!(extent_min_m > 0.0) || extent_max_m < extent_min_m)
    throw ConfigError("world.extent_min_m", "need 0 < extent_min_m <= extent_max_m");
  if (extent_max_m > std::min(canvas_width, canvas_height) * resolution + 1e-9)
    throw ConfigError("world.extent_max_m", "workspace does not fit the canvas");
  if (rooms_min < 1 || rooms_max < rooms_min) throw ConfigError("world.rooms_min", "need 1 <= rooms_min <= rooms_max");
  if (!(door_min_m > 0.0) || door_max_m < door_min_m)
    throw ConfigError("world.door_min_m", "need 0 < door_min_m <= door_max_m");
  if (!(min_room_m > 0.0)) throw ConfigError("world.min_room_m", "must be positive");
  if (!(wall_thickness_m > 0.0)) throw ConfigError("world.wall_thickness_m", "must be positive");
  if (!(obstacle_density >= 0.0) || obstacle_density >= 1.0)
    throw ConfigError("world.obstacle_density", "must lie in [0, 1)");
}

std::vector<Cell> free_cells(const OccupancyGrid& grid) {
  std::vector<Cell> out;
  for (std::size_t i = 0; i < grid.data().size(); ++i)
    if (grid[i] == CellState::Free) out.push_back(grid.geometry().cell_at(i));
  return out;
}

namespace {

// Labels 4-connected Free components; returns the label per cell (-1 if not Free)
// and the size of each component.
std::vector<int> label_free_components(const OccupancyGrid& grid, std::vector<std::size_t>& sizes) {
  const GridGeometry& g = grid.geometry();
  std::vector<int> label(g.size(), -1);
  sizes.clear();
  std::deque<std::size_t> queue;
  for (std::size_t s = 0; s < g.size(); ++s) {
    if (grid[s] != CellState::Free || label[s] >= 0) continue;
    const int id = static_cast<int>(sizes.size());
    std::size_t count = 0;
    label[s] = id;
    queue.assign(1, s);
    while (!queue.empty()) {
      const std::size_t idx = queue.front();
      queue.pop_front();
      ++count;
      const Cell c = g.cell_at(idx);
      for (const auto& d : std::array<std::array<int, 2>, 4>{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}}) {
        const Cell n{c.row + d[0], c.col + d[1]};
        if (!g.contains(n)) continue;
        const std::size_t ni = g.index(n);
        if (grid[ni] == CellState::Free && label[ni] < 0) {
          label[ni] = id;
          queue.push_back(ni);
        }
      }
    }
    sizes.push_back(count);
  }
  return label;
}

struct Rect {
  int r0, c0, r1, c1;  // inclusive
  int rows() const { return r1 - r0 + 1; }
  int cols() const { return c1 - c0 + 1; }
};

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform_real(Rng& rng, double lo, double hi) {
  return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
}

void fill(OccupancyGrid& grid, const Rect& r, CellState s) {
  for (int row = r.r0; row <= r.r1; ++row)
    for (int col = r.c0; col <= r.c1; ++col) grid.at({row, col}) = s;
}

}  // namespace

int count_free_components(const OccupancyGrid& grid) {
  std::vector<std::size_t> sizes;
  label_free_components(grid, sizes);
  return static_cast<int>(sizes.size());
}

OccupancyGrid gen_workspace(std::uint64_t seed, const WorldParams& params) {
  params.validate();
  Rng rng(derive_seed(seed, Stream::kWorld));
  const GridGeometry geom{params.canvas_width, params.canvas_height, params.resolution, {0.0, 0.0}};
  OccupancyGrid grid(geom, CellState::Unknown);

  const auto to_cells = [&](double m) { return static_cast<int>(std::lround(m / params.resolution)); };
  const int ws_cols = std::clamp(to_cells(uniform_real(rng, params.extent_min_m, params.extent_max_m)), 3, geom.width);
  const int ws_rows = std::clamp(to_cells(uniform_real(rng, params.extent_min_m, params.extent_max_m)), 3, geom.height);
  const int off_r = uniform_int(rng, 0, geom.height - ws_rows);
  const int off_c = uniform_int(rng, 0, geom.width - ws_cols);
  const int wall = std::max(1, to_cells(params.wall_thickness_m));

  const Rect outer{off_r, off_c, off_r + ws_rows - 1, off_c + ws_cols - 1};
  fill(grid, outer, CellState::Obstacle);
  const Rect interior{outer.r0 + wall, outer.c0 + wall, outer.r1 - wall, outer.c1 - wall};
  if (interior.rows() < 1 || interior.cols() < 1) throw Error("workspace too small for its walls");
  fill(grid, interior, CellState::Free);

  // Binary space partition into rooms joined by doors.
  const int min_room = std::max(1, to_cells(params.min_room_m));
  const int target_rooms = uniform_int(rng, params.rooms_min, params.rooms_max);
  std::vector<Rect> rooms{interior};
  while (static_cast<int>(rooms.size()) < target_rooms) {
    int pick = -1;
    long best_area = -1;
    for (int i = 0; i < static_cast<int>(rooms.size()); ++i) {
      const Rect& r = rooms[i];
      const bool splittable = std::max(r.rows(), r.cols()) >= 2 * min_room + wall;
      const long area = static_cast<long>(r.rows()) * r.cols();
      if (splittable && area > best_area) {
        best_area = area;
        pick = i;
      }
    }
    if (pick < 0) break;
    const Rect room = rooms[pick];
    bool vertical = room.cols() > room.rows();  // vertical wall splits columns
    if (room.cols() == room.rows()) vertical = uniform_int(rng, 0, 1) == 1;
    if (vertical && room.cols() < 2 * min_room + wall) vertical = false;
    if (!vertical && room.rows() < 2 * min_room + wall) vertical = true;

    const int span = vertical ? room.rows() : room.cols();
    const int door = std::clamp(to_cells(uniform_real(rng, params.door_min_m, params.door_max_m)), 1, span);
    const int door_at = uniform_int(rng, 0, span - door);
    Rect a = room, b = room;
    if (vertical) {
      const int pos = uniform_int(rng, room.c0 + min_room, room.c1 - min_room - wall + 1);
      fill(grid, {room.r0, pos, room.r1, pos + wall - 1}, CellState::Obstacle);
      fill(grid, {room.r0 + door_at, pos, room.r0 + door_at + door - 1, pos + wall - 1}, CellState::Free);
      a.c1 = pos - 1;
      b.c0 = pos + wall;
    } else {
      const int pos = uniform_int(rng, room.r0 + min_room, room.r1 - min_room - wall + 1);
      fill(grid, {pos, room.c0, pos + wall - 1, room.c1}, CellState::Obstacle);
      fill(grid, {pos, room.c0 + door_at, pos + wall - 1, room.c0 + door_at + door - 1}, CellState::Free);
      a.r1 = pos - 1;
      b.r0 = pos + wall;
    }
    rooms[pick] = a;
    rooms.push_back(b);
  }

  // Clutter blocks.
  const long interior_area = static_cast<long>(interior.rows()) * interior.cols();
  const long target = std::lround(params.obstacle_density * static_cast<double>(interior_area));
  long placed = 0;
  for (int attempt = 0; placed < target && attempt < 100000; ++attempt) {
    const int h = uniform_int(rng, 3, 10);
    const int w = uniform_int(rng, 3, 10);
    if (h > interior.rows() || w > interior.cols()) break;
    const int r0 = uniform_int(rng, interior.r0, interior.r1 - h + 1);
    const int c0 = uniform_int(rng, interior.c0, interior.c1 - w + 1);
    for (int r = r0; r < r0 + h; ++r) {
      for (int c = c0; c < c0 + w; ++c) {
        auto& cell = grid.at({r, c});
        if (cell == CellState::Free) {
          cell = CellState::Obstacle;
          ++placed;
        }
      }
    }
  }

  // Keep the largest Free component; everything else becomes Obstacle.
  std::vector<std::size_t> sizes;
  const auto label = label_free_components(grid, sizes);
  if (sizes.empty()) throw Error("workspace has no free space");
  const int keep = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  for (std::size_t i = 0; i < label.size(); ++i)
    if (label[i] >= 0 && label[i] != keep) grid[i] = CellState::Obstacle;
  return grid;
}

Augmentation Augmentation::draw(Rng& rng) {
  Augmentation a;
  a.flip_h = uniform_int(rng, 0, 1) == 1;
  a.flip_v = uniform_int(rng, 0, 1) == 1;
  a.quarter_turns = uniform_int(rng, 0, 3);
  return a;
}

GridGeometry Augmentation::apply(const GridGeometry& g) const {
  GridGeometry out = g;
  if (quarter_turns % 2 == 1) std::swap(out.width, out.height);
  return out;
}

Cell Augmentation::apply(Cell c, const GridGeometry& source) const {
  int h = source.height, w = source.width;
  if (flip_v) c.row = h - 1 - c.row;
  if (flip_h) c.col = w - 1 - c.col;
  for (int t = 0; t < quarter_turns % 4; ++t) {
    c = {c.col, h - 1 - c.row};
    std::swap(h, w);
  }
  return c;
}

Point Augmentation::apply(Point p, const GridGeometry& source) const {
  double hm = source.height_m(), wm = source.width_m();
  double lx = p.x - source.origin.x;
  double ly = p.y - source.origin.y;
  if (flip_v) ly = hm - ly;
  if (flip_h) lx = wm - lx;
  for (int t = 0; t < quarter_turns % 4; ++t) {
    const double nx = hm - ly;
    ly = lx;
    lx = nx;
    std::swap(hm, wm);
  }
  return {source.origin.x + lx, source.origin.y + ly};
}

AugmentedPair augment(const OccupancyGrid& grid, const ScoreMap& score, std::uint64_t seed) {
  if (grid.geometry() != score.geometry()) throw Error("augment: grid and score geometry differ");
  Rng rng(derive_seed(seed, Stream::kAugment));
  const Augmentation op = Augmentation::draw(rng);
  return {op.apply(grid), op.apply(score), op};
}

TrainingSample gen_on_scoremap(const OccupancyGrid& grid, std::uint64_t seed, double disk_radius_m) {
  const auto cells = free_cells(grid);
  if (cells.size() < 3) throw Error("need at least 3 free cells");
  Rng rng(derive_seed(seed, Stream::kSample));
  std::array<std::size_t, 3> pick{};
  for (std::size_t i = 0; i < 3; ++i) {
    std::size_t idx;
    do {
      idx = uniform_index(rng, cells.size());
    } while (std::find(pick.begin(), pick.begin() + i, idx) != pick.begin() + i);
    pick[i] = idx;
  }
  TrainingSample s{ScoreMap(grid.geometry(), 0), grid, {}};
  for (std::size_t i = 0; i < 3; ++i)
    stamp_disk(s.score, grid.geometry().cell_center(cells[pick[i]]), disk_radius_m, kOnDiskScores[i]);
  s.gt_subgoal = grid.geometry().cell_center(cells[pick[0]]);
  return s;
}

AlcScoreMap gen_alc_scoremap(const OccupancyGrid& grid, Point predicted_goal, double K, std::uint64_t seed,
                             double disk_radius_m) {
  if (!(K >= 0.0)) throw Error("K must be non-negative");
  const GridGeometry& g = grid.geometry();
  Point goal;
  if (K == 0.0) {
    const auto cells = free_cells(grid);
    if (cells.empty()) throw Error("uncertainty region blocked");
    Cell best = cells.front();
    double best_d = squared_distance(g.cell_center(best), predicted_goal);
    for (const Cell& c : cells) {
      const double d = squared_distance(g.cell_center(c), predicted_goal);
      if (d < best_d) best_d = d, best = c;
    }
    goal = g.cell_center(best);
  } else {
    const double r2 = K * K + kRadiusSlack;
    const int span = static_cast<int>(std::ceil(K / g.resolution)) + 1;
    const Cell pc = g.world_to_cell(predicted_goal);
    std::vector<Cell> candidates;
    for (int r = std::max(0, pc.row - span); r <= std::min(g.height - 1, pc.row + span); ++r)
      for (int c = std::max(0, pc.col - span); c <= std::min(g.width - 1, pc.col + span); ++c)
        if (grid.at({r, c}) == CellState::Free && squared_distance(g.cell_center({r, c}), predicted_goal) <= r2)
          candidates.push_back({r, c});
    if (candidates.empty()) throw Error("uncertainty region blocked");
    Rng rng(derive_seed(seed, Stream::kAlc));
    goal = g.cell_center(candidates[uniform_index(rng, candidates.size())]);
  }
  AlcScoreMap out{ScoreMap(g, 0), goal};
  stamp_disk(out.score, goal, disk_radius_m, 255);
  return out;
}

EpisodeSpec sample_episode(const OccupancyGrid& grid, double K, std::uint64_t seed, const EpisodeSampling& sampling) {
  if (!(K >= 0.0)) throw Error("K must be non-negative");
  const auto cells = free_cells(grid);
  if (cells.size() < 2) throw Error("episode sampling needs at least 2 free cells");
  const GridGeometry& g = grid.geometry();
  Rng rng(derive_seed(seed, Stream::kEpisode));
  for (int attempt = 0; attempt < sampling.max_retry; ++attempt) {
    const Cell start = cells[uniform_index(rng, cells.size())];
    const Cell goal = cells[uniform_index(rng, cells.size())];
    if (start == goal) continue;
    const auto path = dijkstra(grid, start, goal, false);
    if (!path || path->cost_m < sampling.min_separation_m) continue;

    EpisodeSpec spec;
    spec.workspace = grid;
    spec.start = {g.cell_center(start).x, g.cell_center(start).y,
                  normalize_angle(std::uniform_real_distribution<double>(-std::numbers::pi, std::numbers::pi)(rng))};
    spec.goal = g.cell_center(goal);
    spec.K = K;
    spec.seed = seed;
    spec.predicted_goal = spec.goal;
    if (K > 0.0) {
      for (int inner = 0; inner < 100; ++inner) {
        const double rad = K * std::sqrt(uniform01(rng));
        const double ang = std::uniform_real_distribution<double>(-std::numbers::pi, std::numbers::pi)(rng);
        const Point p{spec.goal.x + rad * std::cos(ang), spec.goal.y + rad * std::sin(ang)};
        if (g.contains(p) && distance(p, spec.goal) <= K) {
          spec.predicted_goal = p;
          break;
        }
      }
    }
    return spec;
  }
  throw Error("episode sampling failed after " + std::to_string(sampling.max_retry) + " attempts");
}

namespace {

std::vector<Cell> ring_cells(const OccupancyGrid& grid, Point center, double r_min, double r_max) {
  const GridGeometry& g = grid.geometry();
  const int span = static_cast<int>(std::ceil(r_max / g.resolution)) + 1;
  const Cell cc = g.world_to_cell(center);
  const double lo2 = r_min * r_min, hi2 = r_max * r_max + kRadiusSlack;
  std::vector<Cell> out;
  for (int r = std::max(0, cc.row - span); r <= std::min(g.height - 1, cc.row + span); ++r) {
    for (int c = std::max(0, cc.col - span); c <= std::min(g.width - 1, cc.col + span); ++c) {
      if (grid.at({r, c}) != CellState::Free) continue;
      const double d2 = squared_distance(g.cell_center({r, c}), center);
      if (d2 >= lo2 && d2 <= hi2) out.push_back({r, c});
    }
  }
  return out;
}

}  // namespace

ScoreMap gen_latent_scores(const OccupancyGrid& world, Point goal, const CueParams& cues, std::uint64_t seed) {
  Rng rng(derive_seed(seed, Stream::kCues));
  ScoreMap score(world.geometry(), 0);
  stamp_disk(score, goal, cues.disk_radius_m, 255);
  const auto near = ring_cells(world, goal, cues.near_min_m, cues.near_max_m);
  if (!near.empty())
    stamp_disk(score, world.geometry().cell_center(near[uniform_index(rng, near.size())]), cues.disk_radius_m, 150);
  const auto far = ring_cells(world, goal, cues.far_min_m, cues.far_max_m);
  if (!far.empty())
    stamp_disk(score, world.geometry().cell_center(far[uniform_index(rng, far.size())]), cues.disk_radius_m, 50);
  return score;
}

std::string validate_sample(const TrainingSample& s, double disk_radius_m) {
  const GridGeometry& g = s.obstacle.geometry();
  if (g != s.score.geometry()) return "score/obstacle geometry mismatch";
  if (!g.contains(s.gt_subgoal)) return "gt_subgoal outside grid";
  const Cell gc = g.world_to_cell(s.gt_subgoal);
  if (s.obstacle.at(gc) != CellState::Free) return "gt_subgoal not on a free cell";
  if (s.score.at(gc) != 255) return "gt_subgoal cell does not score 255";
  for (const auto v : s.score.data())
    if (v != 0 && v != 50 && v != 150 && v != 255) return "unexpected score level " + std::to_string(v);
  // The top level is never overwritten, so its cells are exactly the disk
  // around gt_subgoal.
  ScoreMap disk(g, 0);
  stamp_disk(disk, s.gt_subgoal, disk_radius_m, 255);
  for (std::size_t i = 0; i < g.size(); ++i)
    if ((disk[i] == 255) != (s.score[i] == 255)) return "gt_subgoal is not the centre of the 255 disk";
  return {};
}

}  // namespace alcon
