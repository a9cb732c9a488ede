#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

#include "alcon/error.hpp"
#include "alcon/geometry.hpp"

namespace alcon {

// Metric layout of a 2-D grid. `origin` is the world coordinate of the
// lower-left corner of cell (0,0); cell (r,c) spans
// [origin.x + c*res, origin.x + (c+1)*res) x [origin.y + r*res, ...).
struct GridGeometry {
  int width = 0;   // columns
  int height = 0;  // rows
  double resolution = 0.1;
  Point origin{};

  bool contains(Cell c) const { return c.row >= 0 && c.row < height && c.col >= 0 && c.col < width; }

  // Inside the metric extent of the grid (closed on the low side, open on the high side).
  bool contains(Point p) const {
    const double lx = (p.x - origin.x) / resolution;
    const double ly = (p.y - origin.y) / resolution;
    return lx >= 0.0 && ly >= 0.0 && lx < width && ly < height;
  }

  Point cell_center(Cell c) const {
    return {origin.x + (c.col + 0.5) * resolution, origin.y + (c.row + 0.5) * resolution};
  }

  // Unclamped; callers check `contains`.
  Cell world_to_cell(Point p) const {
    return {static_cast<int>(std::floor((p.y - origin.y) / resolution)),
            static_cast<int>(std::floor((p.x - origin.x) / resolution))};
  }

  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c.col);
  }
  Cell cell_at(std::size_t idx) const {
    return {static_cast<int>(idx / static_cast<std::size_t>(width)), static_cast<int>(idx % static_cast<std::size_t>(width))};
  }
  std::size_t size() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }

  double width_m() const { return width * resolution; }
  double height_m() const { return height * resolution; }

  void validate() const;

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(GridGeometry geometry, T fill) : geometry_(geometry), data_(geometry.size(), fill) {
    geometry_.validate();
  }

  const GridGeometry& geometry() const { return geometry_; }
  int width() const { return geometry_.width; }
  int height() const { return geometry_.height; }
  double resolution() const { return geometry_.resolution; }

  bool contains(Cell c) const { return geometry_.contains(c); }
  T& at(Cell c) { return data_[geometry_.index(c)]; }
  const T& at(Cell c) const { return data_[geometry_.index(c)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  GridGeometry geometry_{};
  std::vector<T> data_;
};

// Values double as the reserved PGM levels of the occupancy file format.
enum class CellState : std::uint8_t { Unknown = 0, Free = 128, Obstacle = 255 };

using OccupancyGrid = Grid<CellState>;
using ScoreMap = Grid<std::uint8_t>;

// Inclusive cell-coordinate box.
struct BoundingBox {
  Cell min{};
  Cell max{};

  int rows() const { return max.row - min.row + 1; }
  int cols() const { return max.col - min.col + 1; }
  bool contains(Cell c) const {
    return c.row >= min.row && c.row <= max.row && c.col >= min.col && c.col <= max.col;
  }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

BoundingBox unite(const BoundingBox& a, const BoundingBox& b);
BoundingBox grow(const BoundingBox& box, int cells, const GridGeometry& clamp_to);

struct FovConfig {
  double radius_m = 3.2;
  double angle_deg = 40.0;
};

// Squared-distance slack used by every "within radius" predicate so that cells
// lying exactly on a circle are included regardless of rounding.
inline constexpr double kRadiusSlack = 1e-9;

// Raises every cell whose center lies within `radius_m` of `center` to at
// least `value`. Cells outside the grid are skipped.
void stamp_disk(ScoreMap& map, Point center, double radius_m, std::uint8_t value);

// Cells inside the sensor sector at `pose` that a grid ray reaches without
// passing through an Obstacle cell. Rays are cast from the robot's cell to
// every sector cell; the first Obstacle on a ray is visible, including one
// hit on the way to a cell further out. Result is sorted by (row, col).
std::vector<Cell> sector_visible_cells(const OccupancyGrid& grid, const Pose& pose, const FovConfig& fov);

// Tight box around all Free and Obstacle cells. Throws when nothing is mapped.
BoundingBox mapped_bounding_box(const OccupancyGrid& grid);

// Pads the map by ceil(margin/resolution) zero cells on every side. World
// coordinates of existing content are unchanged.
ScoreMap expand_map(const ScoreMap& score, double margin_m);

int margin_cells(double margin_m, double resolution);

// Cells traversed by the integer line from `a` to `b`, both endpoints included.
std::vector<Cell> bresenham_line(Cell a, Cell b);

}  // namespace alcon
