#include "alcon/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace alcon {

void GridGeometry::validate() const {
  if (width <= 0 || height <= 0) throw Error("grid dimensions must be positive");
  if (!(resolution > 0.0) || !std::isfinite(resolution)) throw Error("grid resolution must be positive");
}

BoundingBox unite(const BoundingBox& a, const BoundingBox& b) {
  return {{std::min(a.min.row, b.min.row), std::min(a.min.col, b.min.col)},
          {std::max(a.max.row, b.max.row), std::max(a.max.col, b.max.col)}};
}

BoundingBox grow(const BoundingBox& box, int cells, const GridGeometry& clamp_to) {
  return {{std::max(0, box.min.row - cells), std::max(0, box.min.col - cells)},
          {std::min(clamp_to.height - 1, box.max.row + cells), std::min(clamp_to.width - 1, box.max.col + cells)}};
}

int margin_cells(double margin_m, double resolution) {
  if (margin_m <= 0.0) return 0;
  return static_cast<int>(std::ceil(margin_m / resolution - 1e-9));
}

void stamp_disk(ScoreMap& map, Point center, double radius_m, std::uint8_t value) {
  if (value == 0 || radius_m <= 0.0) return;
  const GridGeometry& g = map.geometry();
  const double r2 = radius_m * radius_m + kRadiusSlack;
  const int span = static_cast<int>(std::ceil(radius_m / g.resolution)) + 1;
  const Cell c0 = g.world_to_cell(center);
  const int r_lo = std::max(0, c0.row - span);
  const int r_hi = std::min(g.height - 1, c0.row + span);
  const int c_lo = std::max(0, c0.col - span);
  const int c_hi = std::min(g.width - 1, c0.col + span);
  for (int r = r_lo; r <= r_hi; ++r) {
    for (int c = c_lo; c <= c_hi; ++c) {
      const Cell cell{r, c};
      if (squared_distance(g.cell_center(cell), center) <= r2) {
        auto& v = map.at(cell);
        v = std::max(v, value);
      }
    }
  }
}

std::vector<Cell> bresenham_line(Cell a, Cell b) {
  std::vector<Cell> out;
  int x0 = a.col, y0 = a.row;
  const int x1 = b.col, y1 = b.row;
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  out.reserve(static_cast<std::size_t>(std::max(dx, -dy)) + 1);
  while (true) {
    out.push_back({y0, x0});
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
  return out;
}

namespace {

// Bresenham lines from the window centre to every cell of a (2*span+1)^2
// window, as flat index offsets excluding the start cell.
struct RayTable {
  int span = -1;
  std::vector<int> offsets;
  std::vector<std::size_t> start;
};

const RayTable& ray_table(int span) {
  thread_local RayTable table;
  if (table.span == span) return table;
  const int W = 2 * span + 1;
  table = {};
  table.span = span;
  table.start.reserve(static_cast<std::size_t>(W) * W + 1);
  for (int dr = -span; dr <= span; ++dr)
    for (int dc = -span; dc <= span; ++dc) {
      table.start.push_back(table.offsets.size());
      const auto line = bresenham_line({0, 0}, {dr, dc});
      for (std::size_t k = 1; k < line.size(); ++k) table.offsets.push_back(line[k].row * W + line[k].col);
    }
  table.start.push_back(table.offsets.size());
  return table;
}

}  // namespace

std::vector<Cell> sector_visible_cells(const OccupancyGrid& grid, const Pose& pose, const FovConfig& fov) {
  const GridGeometry& g = grid.geometry();
  const Point p = pose.position();
  const Cell here = g.world_to_cell(p);
  if (!g.contains(here) || grid.at(here) == CellState::Obstacle) throw Error("invalid pose");

  const double half = fov.angle_deg * std::numbers::pi / 360.0;
  const double r2 = fov.radius_m * fov.radius_m + kRadiusSlack;
  const int span = static_cast<int>(std::ceil(std::max(fov.radius_m, 0.0) / g.resolution)) + 1;
  const double hx = std::cos(pose.heading), hy = std::sin(pose.heading);
  const double cos_half = std::cos(half);

  // Local window around the sector's bounding box: bit 1 = inside the sector, bit 2 = seen.
  std::vector<Point> extent{p};
  const auto add_ray = [&](double a) {
    extent.push_back({p.x + fov.radius_m * std::cos(a), p.y + fov.radius_m * std::sin(a)});
  };
  add_ray(pose.heading - half);
  add_ray(pose.heading + half);
  for (int k = 0; k < 4; ++k) {
    const double axis = k * std::numbers::pi / 2.0;
    if (std::abs(normalize_angle(axis - pose.heading)) <= half) add_ray(axis);
  }
  int r0 = here.row, r1 = here.row, c0 = here.col, c1 = here.col;
  for (const Point& e : extent) {
    const Cell c = g.world_to_cell(e);
    r0 = std::min(r0, c.row), r1 = std::max(r1, c.row);
    c0 = std::min(c0, c.col), c1 = std::max(c1, c.col);
  }
  r0 = std::max({0, r0 - 1, here.row - span}), r1 = std::min({g.height - 1, r1 + 1, here.row + span});
  c0 = std::max({0, c0 - 1, here.col - span}), c1 = std::min({g.width - 1, c1 + 1, here.col + span});

  // Fixed-stride window centred on the robot so that ray offsets are constants.
  const int W = 2 * span + 1;
  const RayTable& rays = ray_table(span);
  thread_local std::vector<std::uint8_t> mask, blocked;
  mask.assign(static_cast<std::size_t>(W) * W, 0);
  blocked.resize(mask.size());
  const auto local = [&](int r, int c) {
    return static_cast<std::size_t>(r - here.row + span) * W + static_cast<std::size_t>(c - here.col + span);
  };
  const CellState* cells = grid.data().data();
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const std::size_t i = local(r, c);
      blocked[i] = cells[g.index({r, c})] == CellState::Obstacle;
      const Point q = g.cell_center({r, c});
      if (squared_distance(p, q) > r2) continue;
      // Cheap cone test first; atan2 only decides cells near the sector edge.
      const double vx = q.x - p.x, vy = q.y - p.y;
      const double along = vx * hx + vy * hy;
      const double norm = std::sqrt(vx * vx + vy * vy);
      if (along < norm * cos_half - 1e-6) continue;
      if (along < norm * cos_half + 1e-6) {
        const double bearing = normalize_angle(std::atan2(vy, vx) - pose.heading);
        if (std::abs(bearing) > half) continue;
      }
      mask[i] = 1;  // bit 1: inside the sector
    }
  }
  const std::size_t centre = local(here.row, here.col);
  mask[centre] |= 2;  // bit 2: seen

  // March a ray to every sector cell. Sector cells passed before the first
  // Obstacle are seen, and so is that Obstacle; the march stops there. Every
  // ray stays inside the bounding box of its endpoints, hence inside the window.
  std::uint8_t* const m = mask.data();
  const std::uint8_t* const blk = blocked.data();
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const std::size_t t = local(r, c);
      if (!(m[t] & 1)) continue;
      const int* off = rays.offsets.data() + rays.start[t];
      const int* const end = rays.offsets.data() + rays.start[t + 1];
      for (; off != end; ++off) {
        const std::size_t i = centre + *off;
        if (m[i] & 1) m[i] |= 2;
        if (blk[i]) break;
      }
    }
  }

  std::vector<Cell> out;
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c)
      if (m[local(r, c)] & 2) out.push_back({r, c});
  return out;
}

BoundingBox mapped_bounding_box(const OccupancyGrid& grid) {
  const GridGeometry& g = grid.geometry();
  BoundingBox box{{g.height, g.width}, {-1, -1}};
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      if (grid.at({r, c}) == CellState::Unknown) continue;
      box.min.row = std::min(box.min.row, r);
      box.min.col = std::min(box.min.col, c);
      box.max.row = std::max(box.max.row, r);
      box.max.col = std::max(box.max.col, c);
    }
  }
  if (box.max.row < 0) throw Error("nothing mapped");
  return box;
}

ScoreMap expand_map(const ScoreMap& score, double margin_m) {
  if (margin_m < 0.0) throw Error("expand margin must be non-negative");
  const int m = margin_cells(margin_m, score.resolution());
  if (m == 0) return score;
  GridGeometry g = score.geometry();
  g.width += 2 * m;
  g.height += 2 * m;
  g.origin.x -= m * g.resolution;
  g.origin.y -= m * g.resolution;
  ScoreMap out(g, 0);
  for (int r = 0; r < score.height(); ++r) {
    for (int c = 0; c < score.width(); ++c) out.at({r + m, c + m}) = score.at({r, c});
  }
  return out;
}

}  // namespace alcon
